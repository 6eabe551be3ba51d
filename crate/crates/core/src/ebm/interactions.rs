use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{build_feature_bins, FeatureBins};
use super::EbmModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

const BACKFIT_ITERS: usize = 200;
const BACKFIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionCandidate {
    pub pair: (usize, usize),
    /// Weighted residual sum-of-squares reduction of the full grid fit beyond the
    /// best additive (row + column) fit on the same grid.
    pub score: f64,
}

/// Scores every feature pair against the model's working residuals; sorted by
/// score descending, ties by `(i, j)`.
pub fn rank_interactions(ds: &Dataset, model: &EbmModel, grid: usize) -> Result<Vec<InteractionCandidate>> {
    if ds.n_features() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            found: ds.n_features(),
        });
    }
    if grid < 2 {
        return Err(Error::validation(format!("interaction grid must be >= 2, got {grid}")));
    }
    let p = ds.n_features();
    let (w0, w1) = model.config.class_weight;
    let weights: Vec<f64> = ds.y().iter().map(|&v| if v == 1 { w1 } else { w0 }).collect();
    let probas = model.predict_proba_matrix(ds.x())?;
    let resid: Vec<f64> = ds
        .y()
        .iter()
        .zip(&probas)
        .map(|(&y, &p)| f64::from(y) - p)
        .collect();
    let bins: Vec<FeatureBins> = (0..p)
        .into_par_iter()
        .map(|j| build_feature_bins(&ds.column(j), grid, model.config.min_samples_bin))
        .collect();
    let coarse: Vec<Vec<u32>> = (0..p).map(|j| bins[j].bin_all(&ds.column(j))).collect();
    let n_bins: Vec<usize> = bins.iter().map(FeatureBins::n_bins).collect();
    Ok(rank_from_parts(&coarse, &n_bins, &resid, &weights))
}

/// Top-`k` pairs from [`rank_interactions`]. `k` above the number of pairs is
/// clamped with a warning.
pub fn detect_interactions(ds: &Dataset, model: &EbmModel, k: usize, grid: usize) -> Result<Vec<(usize, usize)>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let p = ds.n_features();
    let max_pairs = p * p.saturating_sub(1) / 2;
    if k > max_pairs {
        log::warn!("requested {k} interactions but only {max_pairs} pairs exist; clamping");
    }
    let ranked = rank_interactions(ds, model, grid)?;
    Ok(ranked.into_iter().take(k.min(max_pairs)).map(|c| c.pair).collect())
}

pub(crate) fn rank_from_parts(
    coarse: &[Vec<u32>],
    n_bins: &[usize],
    resid: &[f64],
    weights: &[f64],
) -> Vec<InteractionCandidate> {
    let p = coarse.len();
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .collect();
    let mut ranked: Vec<InteractionCandidate> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (na, nb) = (n_bins[i], n_bins[j]);
            let mut sums = vec![0.0; na * nb];
            let mut wsum = vec![0.0; na * nb];
            for (((&a, &b), &r), &w) in coarse[i].iter().zip(&coarse[j]).zip(resid).zip(weights) {
                let c = a as usize * nb + b as usize;
                sums[c] += w * r;
                wsum[c] += w;
            }
            InteractionCandidate {
                pair: (i, j),
                score: interaction_gain(&sums, &wsum, na, nb),
            }
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.pair.cmp(&b.pair)));
    ranked
}

/// Reduction of the piecewise-constant grid fit minus the reduction of the best
/// additive fit, from per-cell weighted residual sums `s` and weights `w`.
///
/// For a fit `f`, reduction = `sum_c 2 f_c s_c - f_c^2 w_c`; the grid optimum is
/// `s_c / w_c`, the additive optimum is found by backfitting row and column effects.
pub(crate) fn interaction_gain(s: &[f64], w: &[f64], na: usize, nb: usize) -> f64 {
    let full: f64 = s
        .iter()
        .zip(w)
        .filter(|(_, &wc)| wc > 0.0)
        .map(|(&sc, &wc)| sc * sc / wc)
        .sum();
    let (rows, cols) = additive_fit(s, w, na, nb);
    let mut additive = 0.0;
    for a in 0..na {
        for b in 0..nb {
            let c = a * nb + b;
            let f = rows[a] + cols[b];
            additive += 2.0 * f * s[c] - f * f * w[c];
        }
    }
    (full - additive).max(0.0)
}

fn additive_fit(s: &[f64], w: &[f64], na: usize, nb: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rows = vec![0.0; na];
    let mut cols = vec![0.0; nb];
    for _ in 0..BACKFIT_ITERS {
        let mut change: f64 = 0.0;
        for a in 0..na {
            let (mut num, mut den) = (0.0, 0.0);
            for b in 0..nb {
                let c = a * nb + b;
                num += s[c] - w[c] * cols[b];
                den += w[c];
            }
            let new = if den > 0.0 { num / den } else { 0.0 };
            change = change.max((new - rows[a]).abs());
            rows[a] = new;
        }
        for b in 0..nb {
            let (mut num, mut den) = (0.0, 0.0);
            for a in 0..na {
                let c = a * nb + b;
                num += s[c] - w[c] * rows[a];
                den += w[c];
            }
            let new = if den > 0.0 { num / den } else { 0.0 };
            change = change.max((new - cols[b]).abs());
            cols[b] = new;
        }
        if change < BACKFIT_TOL {
            break;
        }
    }
    (rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_grid_has_no_gain() {
        // s = w * (row + col) exactly
        let (na, nb) = (3, 4);
        let w: Vec<f64> = (0..12).map(|c| 1.0 + (c % 5) as f64).collect();
        let s: Vec<f64> = (0..12)
            .map(|c| w[c] * ((c / nb) as f64 * 0.3 - 0.2 * (c % nb) as f64))
            .collect();
        assert!(interaction_gain(&s, &w, na, nb) < 1e-9);
    }

    #[test]
    fn checkerboard_has_full_gain() {
        // 2x2 XOR pattern of residuals: no additive structure at all.
        let w = vec![10.0; 4];
        let s = vec![5.0, -5.0, -5.0, 5.0];
        let gain = interaction_gain(&s, &w, 2, 2);
        assert!((gain - 10.0).abs() < 1e-9);
    }
}

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oa::OrthogonalArray;
use crate::dataset::{Dataset, StratifiedFolds};
use crate::error::{Error, Result};
use crate::metrics::roc_auc;
use crate::model::{Classifier, ModelSpec, TrainedModel};
use crate::scaling::{fit_sequence_on, FittedSequence, ScalerSequence};
use crate::stats;

/// Larger-the-better signal-to-noise ratio in dB: `-10 log10(mean(1 / v^2))`.
pub fn sn_ratio(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::validation("S/N ratio needs at least one value"));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::validation(format!(
            "S/N ratio needs finite positive values, got {v}"
        )));
    }
    let m = values.iter().map(|v| 1.0 / (v * v)).sum::<f64>() / values.len() as f64;
    Ok(-10.0 * m.log10())
}

/// Scanning left to right, any level already used is replaced by 0 ("do
/// nothing"), so no scaler appears twice.
pub fn row_to_scaler_codes(levels: &[usize]) -> Vec<u8> {
    let mut seen = Vec::new();
    levels
        .iter()
        .map(|&l| {
            if seen.contains(&l) {
                0
            } else {
                seen.push(l);
                l as u8
            }
        })
        .collect()
}

/// A runnable configuration: preprocessing plus learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub scalers: ScalerSequence,
    pub model: ModelSpec,
}

/// A configuration fitted on one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedTrial {
    pub scalers: FittedSequence,
    pub model: TrainedModel,
}

impl FittedTrial {
    pub fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        self.model.predict_proba(&self.scalers.apply(x)?)
    }
}

/// Fits the scaler sequence on `train` only (restricted to `scaler_columns` when
/// given), then trains the model with `seed` on the scaled rows.
pub fn fit_trial(cfg: &TrialConfig, train: &Dataset, scaler_columns: Option<&[usize]>, seed: u64) -> Result<FittedTrial> {
    let scalers = fit_sequence_on(&cfg.scalers, train.x(), scaler_columns)?;
    let scaled = train.with_matrix(scalers.apply(train.x())?)?;
    let model = cfg.model.with_seed(seed).fit(&scaled)?;
    Ok(FittedTrial { scalers, model })
}

/// Scores one configuration on one train/validation split.
pub trait Trainer: Sync {
    fn score(&self, cfg: &TrialConfig, train: &Dataset, valid: &Dataset, seed: u64) -> Result<f64>;
}

/// Held-out ROC-AUC of [`fit_trial`].
#[derive(Debug, Clone, Default)]
pub struct AucTrainer {
    pub scaler_columns: Option<Vec<usize>>,
}

impl Trainer for AucTrainer {
    fn score(&self, cfg: &TrialConfig, train: &Dataset, valid: &Dataset, seed: u64) -> Result<f64> {
        let fitted = fit_trial(cfg, train, self.scaler_columns.as_deref(), seed)?;
        roc_auc(valid.y(), &fitted.predict_proba(valid.x())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// 0-based run index in the array.
    pub row: usize,
    pub levels: Vec<usize>,
    /// `None` when the row could not even be mapped to a configuration.
    pub config: Option<TrialConfig>,
    pub fold_scores: Vec<f64>,
    pub mean: Option<f64>,
    pub sn_ratio: Option<f64>,
    /// Failure reason; failed rows have no mean or S/N.
    pub error: Option<String>,
}

impl ExperimentResult {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Seed used for fold `fold` of run `row`.
pub fn trial_seed(master: u64, row: usize, fold: usize) -> u64 {
    stats::derive_seed(stats::derive_seed(master, 0xD0E, row as u64), 0, fold as u64)
}

/// Runs every array row under cross-validation on the shared `folds`.
///
/// Rows are independent and run in parallel; a row whose mapping, training or
/// S/N fails is kept with its reason instead of aborting the run.
pub fn run_experiment(
    ds: &Dataset,
    oa: &OrthogonalArray,
    mapper: &(dyn Fn(&[usize]) -> Result<TrialConfig> + Sync),
    trainer: &dyn Trainer,
    folds: &StratifiedFolds,
    seed: u64,
) -> Result<Vec<ExperimentResult>> {
    if folds.assignment.len() != ds.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_rows(),
            found: folds.assignment.len(),
        });
    }
    let splits: Vec<(Dataset, Dataset)> = (0..folds.k)
        .map(|f| {
            let (tr, va) = folds.split(f);
            (ds.subset_rows(&tr), ds.subset_rows(&va))
        })
        .collect();
    let results = oa
        .rows
        .par_iter()
        .enumerate()
        .map(|(row, levels)| {
            let mut result = ExperimentResult {
                row,
                levels: levels.clone(),
                config: None,
                fold_scores: Vec::new(),
                mean: None,
                sn_ratio: None,
                error: None,
            };
            let outcome = mapper(levels).and_then(|cfg| {
                result.config = Some(cfg.clone());
                let scores = splits
                    .iter()
                    .enumerate()
                    .map(|(f, (tr, va))| trainer.score(&cfg, tr, va, trial_seed(seed, row, f)))
                    .collect::<Result<Vec<f64>>>()?;
                let sn = sn_ratio(&scores)?;
                Ok((scores, sn))
            });
            match outcome {
                Ok((scores, sn)) => {
                    result.mean = Some(stats::mean(&scores));
                    result.fold_scores = scores;
                    result.sn_ratio = Some(sn);
                }
                Err(e) => {
                    log::warn!("experiment row {row} failed: {e}");
                    result.error = Some(e.to_string());
                }
            }
            result
        })
        .collect();
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEffect {
    pub factor: usize,
    /// Mean S/N per level (index 0 = level 1); `None` when no successful row used it.
    pub level_means: Vec<Option<f64>>,
    pub level_counts: Vec<usize>,
    /// 1-based level with the highest mean S/N; the lowest such level on ties.
    pub best_level: usize,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub effects: Vec<FactorEffect>,
    /// Best level of every factor according to the main effects.
    pub predicted_best_levels: Vec<usize>,
    /// Row with the highest mean objective; the lowest row index on ties.
    pub best_observed_row: usize,
    pub best_observed_mean: f64,
    pub best_observed_tie: bool,
    pub excluded_rows: Vec<usize>,
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Main-effects analysis of S/N ratios plus the best observed row. Failed rows
/// are excluded with a warning.
pub fn main_effects_select(oa: &OrthogonalArray, results: &[ExperimentResult]) -> Result<Selection> {
    let ok: Vec<&ExperimentResult> = results.iter().filter(|r| r.succeeded()).collect();
    if ok.is_empty() {
        return Err(Error::Training("every experiment row failed".into()));
    }
    let excluded_rows: Vec<usize> = results.iter().filter(|r| !r.succeeded()).map(|r| r.row).collect();
    if !excluded_rows.is_empty() {
        log::warn!("main effects exclude failed rows {excluded_rows:?}");
    }
    let mut effects = Vec::with_capacity(oa.n_factors());
    for f in 0..oa.n_factors() {
        let mut sums = vec![0.0; oa.levels];
        let mut counts = vec![0usize; oa.levels];
        for r in &ok {
            let level = r.levels[f];
            sums[level - 1] += r.sn_ratio.unwrap_or(f64::NAN);
            counts[level - 1] += 1;
        }
        let level_means: Vec<Option<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect();
        let mut best: Option<(usize, f64)> = None;
        let mut tie = false;
        for (l, m) in level_means.iter().enumerate() {
            let Some(m) = *m else { continue };
            match best {
                None => best = Some((l, m)),
                Some((_, bm)) if nearly_equal(m, bm) => tie = true,
                Some((_, bm)) if m > bm => {
                    best = Some((l, m));
                    tie = false;
                }
                _ => {}
            }
        }
        let (best_level, _) = best.expect("at least one successful row");
        effects.push(FactorEffect {
            factor: f,
            level_means,
            level_counts: counts,
            best_level: best_level + 1,
            tie,
        });
    }
    let mut best_row = ok[0];
    let mut best_tie = false;
    for r in &ok[1..] {
        let (m, bm) = (r.mean.unwrap_or(f64::NAN), best_row.mean.unwrap_or(f64::NAN));
        if m > bm {
            best_row = r;
            best_tie = false;
        } else if m == bm {
            best_tie = true;
        }
    }
    Ok(Selection {
        predicted_best_levels: effects.iter().map(|e| e.best_level).collect(),
        effects,
        best_observed_row: best_row.row,
        best_observed_mean: best_row.mean.unwrap_or(f64::NAN),
        best_observed_tie: best_tie,
        excluded_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sn_examples() {
        assert_eq!(sn_ratio(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((sn_ratio(&[10.0]).unwrap() - 20.0).abs() < 1e-12);
        let expected = -10.0 * ((1.0 / 0.81 + 1.0 / 0.64) / 2.0f64).log10();
        assert!((sn_ratio(&[0.9, 0.8]).unwrap() - expected).abs() < 1e-12);
        assert!(sn_ratio(&[0.5, 0.0]).is_err());
        assert!(sn_ratio(&[]).is_err());
    }

    #[test]
    fn dedup_rule() {
        assert_eq!(row_to_scaler_codes(&[2, 2, 3, 1, 1]), vec![2, 0, 3, 1, 0]);
        assert_eq!(row_to_scaler_codes(&[1, 2, 3, 4, 5]), vec![1, 2, 3, 4, 5]);
        assert_eq!(row_to_scaler_codes(&[4, 4, 4, 4, 4]), vec![4, 0, 0, 0, 0]);
    }
}

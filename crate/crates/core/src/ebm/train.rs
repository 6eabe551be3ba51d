use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{build_bins, build_feature_bins, FeatureBins};
use super::interactions::{rank_from_parts, InteractionCandidate};
use super::{EbmConfig, EbmModel, InteractionTerm, ShapeFunction};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::stats;

/// Per-bag training log-loss after initialization and after every round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub univariate: Vec<Vec<f64>>,
    pub pairs: Vec<Vec<f64>>,
    pub interaction_ranking: Vec<InteractionCandidate>,
}

pub fn train_ebm(ds: &Dataset, cfg: &EbmConfig) -> Result<EbmModel> {
    train_ebm_with_trace(ds, cfg).map(|(model, _)| model)
}

/// Row-level inputs shared by every bag.
struct Prepared {
    y: Vec<f64>,
    class_w: Vec<f64>,
    binned: Vec<Vec<u32>>,
    n_bins: Vec<usize>,
}

/// Binned columns on the pair-term grid.
struct PairBins {
    bins: Vec<FeatureBins>,
    binned: Vec<Vec<u32>>,
}

impl PairBins {
    fn n_bins(&self, j: usize) -> usize {
        self.bins[j].n_bins()
    }
}

struct BagUnivariate {
    intercept: f64,
    scores: Vec<Vec<f64>>,
    logits: Vec<f64>,
    weights: Vec<f64>,
    /// Class weights of held-out rows (early stopping only).
    holdout: Option<Vec<f64>>,
    trace: Vec<f64>,
}

/// Tracks held-out loss; `observe` returns true once the stage should stop.
struct Stopper<'a> {
    y: &'a [f64],
    holdout: &'a [f64],
    patience: usize,
    best: f64,
    best_round: usize,
    since: usize,
}

impl<'a> Stopper<'a> {
    fn new(y: &'a [f64], holdout: &'a [f64], patience: usize, logits: &[f64]) -> Self {
        Stopper {
            y,
            holdout,
            patience,
            best: weighted_loss(y, logits, holdout),
            best_round: 0,
            since: 0,
        }
    }

    /// Records the loss after `round` (1-based); true when patience ran out.
    fn observe(&mut self, round: usize, logits: &[f64]) -> bool {
        let loss = weighted_loss(self.y, logits, self.holdout);
        if loss < self.best - 1e-12 * self.best.abs() {
            self.best = loss;
            self.best_round = round;
            self.since = 0;
        } else {
            self.since += 1;
        }
        self.since >= self.patience
    }
}

/// Trains the model and records the per-round training losses.
///
/// Each round computes residuals `y - p` once, derives a per-bin step
/// `learning_rate * sum(w r) / sum(w)` for every feature from those residuals, then
/// applies all steps together. Because no feature's step sees another feature's
/// update from the same round, the visiting order cannot change the result.
pub fn train_ebm_with_trace(ds: &Dataset, cfg: &EbmConfig) -> Result<(EbmModel, TrainingTrace)> {
    cfg.validate()?;
    ds.require_both_classes()?;
    let n = ds.n_rows();
    let p = ds.n_features();

    let bins = build_bins(ds.x(), cfg.max_bins, cfg.min_samples_bin);
    let binned: Vec<Vec<u32>> = (0..p)
        .into_par_iter()
        .map(|j| bins.features[j].bin_all(&ds.column(j)))
        .collect();
    let prep = Prepared {
        y: ds.y().iter().map(|&v| f64::from(v)).collect(),
        class_w: ds
            .y()
            .iter()
            .map(|&v| if v == 1 { cfg.class_weight.1 } else { cfg.class_weight.0 })
            .collect(),
        n_bins: bins.features.iter().map(FeatureBins::n_bins).collect(),
        binned,
    };

    let bags: Vec<BagUnivariate> = (0..cfg.outer_bags)
        .into_par_iter()
        .map(|b| {
            let (weights, holdout) = bag_weights(&prep.class_w, cfg, b);
            boost_univariate(&prep, weights, holdout, cfg)
        })
        .collect();

    let uni_traces: Vec<Vec<f64>> = bags.iter().map(|b| b.trace.clone()).collect();
    let n_bags = bags.len() as f64;
    let mut intercept = bags.iter().map(|b| b.intercept).sum::<f64>() / n_bags;
    let mut uni_scores: Vec<Vec<f64>> = prep.n_bins.iter().map(|&nb| vec![0.0; nb]).collect();
    for bag in &bags {
        for (acc, s) in uni_scores.iter_mut().zip(&bag.scores) {
            for (a, v) in acc.iter_mut().zip(s) {
                *a += v;
            }
        }
    }
    for s in uni_scores.iter_mut() {
        s.iter_mut().for_each(|v| *v /= n_bags);
    }

    // Interaction detection on the bag-averaged univariate model.
    let max_pairs = p * p.saturating_sub(1) / 2;
    let k = if cfg.interactions > max_pairs {
        log::warn!(
            "requested {} interactions but only {max_pairs} pairs exist; clamping",
            cfg.interactions
        );
        max_pairs
    } else {
        cfg.interactions
    };
    let mut ranking = Vec::new();
    let mut pair_terms: Vec<InteractionTerm> = Vec::new();
    let mut pair_traces = Vec::new();
    if k > 0 {
        let coarse_bins: Vec<FeatureBins> = (0..p)
            .into_par_iter()
            .map(|j| build_feature_bins(&ds.column(j), cfg.interaction_grid, cfg.min_samples_bin))
            .collect();
        let coarse: Vec<Vec<u32>> = (0..p)
            .into_par_iter()
            .map(|j| coarse_bins[j].bin_all(&ds.column(j)))
            .collect();
        let coarse_n: Vec<usize> = coarse_bins.iter().map(FeatureBins::n_bins).collect();
        let resid: Vec<f64> = (0..n)
            .map(|i| {
                let mut logit = intercept;
                for j in 0..p {
                    logit += uni_scores[j][prep.binned[j][i] as usize];
                }
                prep.y[i] - stats::sigmoid(logit)
            })
            .collect();
        ranking = rank_from_parts(&coarse, &coarse_n, &resid, &prep.class_w);
        let selected: Vec<(usize, usize)> = ranking.iter().take(k).map(|c| c.pair).collect();

        let pair_bins: Vec<FeatureBins> = (0..p)
            .into_par_iter()
            .map(|j| build_feature_bins(&ds.column(j), cfg.max_interaction_bins, cfg.min_samples_bin))
            .collect();
        let grid = PairBins {
            binned: (0..p)
                .into_par_iter()
                .map(|j| pair_bins[j].bin_all(&ds.column(j)))
                .collect(),
            bins: pair_bins,
        };
        let pair_results: Vec<(Vec<Vec<PairStep>>, Vec<f64>)> = bags
            .into_par_iter()
            .map(|bag| boost_pairs(&prep, &grid, bag, &selected, cfg))
            .collect();
        let mut steps_per_pair: Vec<Vec<PairStep>> = vec![Vec::new(); selected.len()];
        for (steps, trace) in pair_results {
            for (acc, s) in steps_per_pair.iter_mut().zip(steps) {
                acc.extend(s);
            }
            pair_traces.push(trace);
        }
        for (&(a, b), steps) in selected.iter().zip(&steps_per_pair) {
            pair_terms.push(compress_pair(&grid, (a, b), steps, n_bags));
        }
    }

    // Centre every term on the training distribution; the mean moves to the intercept.
    let mut univariate = Vec::with_capacity(p);
    for (j, mut scores) in uni_scores.into_iter().enumerate() {
        let bin_weights = counts(&prep.binned[j], prep.n_bins[j]);
        intercept += center(&mut scores, &bin_weights);
        univariate.push(ShapeFunction {
            feature: j,
            scores,
            bin_weights,
        });
    }
    for term in pair_terms.iter_mut() {
        intercept += center(&mut term.scores, &term.bin_weights);
    }

    let mut model = EbmModel {
        feature_names: ds.feature_names().to_vec(),
        intercept,
        bins,
        univariate,
        pairs: pair_terms,
        importances: Vec::new(),
        config: cfg.clone(),
    };
    model.importances = model.compute_importances();
    let trace = TrainingTrace {
        univariate: uni_traces,
        pairs: pair_traces,
        interaction_ranking: ranking,
    };
    Ok((model, trace))
}

/// Bootstrap multiplicities times class weights; a single bag uses every row
/// once. With early stopping, a random share of rows is moved from training to a
/// held-out weight vector.
fn bag_weights(class_w: &[f64], cfg: &EbmConfig, bag: usize) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = class_w.len();
    let mut weights = if cfg.outer_bags == 1 {
        class_w.to_vec()
    } else {
        let mut rng = stats::rng(stats::derive_seed(cfg.seed, 0xB0, bag as u64));
        let mut mult = vec![0u32; n];
        for _ in 0..n {
            mult[rand::Rng::random_range(&mut rng, 0..n)] += 1;
        }
        mult.iter().zip(class_w).map(|(&m, &w)| f64::from(m) * w).collect()
    };
    let holdout = cfg.early_stopping.map(|es| {
        let mut rng = stats::rng(stats::derive_seed(cfg.seed, 0xE5, bag as u64));
        let mut held = vec![0.0; n];
        for i in 0..n {
            if rand::Rng::random::<f64>(&mut rng) < es.validation_fraction {
                held[i] = class_w[i];
                weights[i] = 0.0;
            }
        }
        held
    });
    // A holdout without weight cannot drive a stop.
    let holdout = holdout.filter(|h| h.iter().any(|&w| w > 0.0));
    (weights, holdout)
}

fn weighted_loss(y: &[f64], logits: &[f64], w: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut wsum = 0.0;
    for ((&yi, &zi), &wi) in y.iter().zip(logits).zip(w) {
        if wi > 0.0 {
            total += wi * stats::log_loss_logit(yi, zi);
            wsum += wi;
        }
    }
    total / wsum
}

fn residuals(y: &[f64], logits: &[f64]) -> Vec<f64> {
    y.iter().zip(logits).map(|(&yi, &z)| yi - stats::sigmoid(z)).collect()
}

/// Per-bin step `lr * sum(w r) / sum(w)` for one binned column.
fn bin_step(binned: &[u32], n_bins: usize, resid: &[f64], w: &[f64], lr: f64) -> Vec<f64> {
    let mut g = vec![0.0; n_bins];
    let mut h = vec![0.0; n_bins];
    for ((&b, &r), &wi) in binned.iter().zip(resid).zip(w) {
        if wi > 0.0 {
            g[b as usize] += wi * r;
            h[b as usize] += wi;
        }
    }
    g.iter()
        .zip(&h)
        .map(|(&gb, &hb)| if hb > 0.0 { lr * gb / hb } else { 0.0 })
        .collect()
}

fn boost_univariate(prep: &Prepared, weights: Vec<f64>, holdout: Option<Vec<f64>>, cfg: &EbmConfig) -> BagUnivariate {
    let n = prep.y.len();
    let total_w: f64 = weights.iter().sum();
    let pos_w: f64 = weights.iter().zip(&prep.y).map(|(w, y)| w * y).sum();
    let base = (pos_w / total_w).clamp(1e-12, 1.0 - 1e-12);
    let intercept = (base / (1.0 - base)).ln();
    let mut logits = vec![intercept; n];
    let mut scores: Vec<Vec<f64>> = prep.n_bins.iter().map(|&nb| vec![0.0; nb]).collect();
    let mut trace = vec![weighted_loss(&prep.y, &logits, &weights)];
    let mut stopper = match (&holdout, cfg.early_stopping) {
        (Some(h), Some(es)) => Some(Stopper::new(&prep.y, h, es.patience, &logits)),
        _ => None,
    };
    let mut best = (scores.clone(), logits.clone());

    for round in 1..=cfg.max_rounds {
        let resid = residuals(&prep.y, &logits);
        let steps: Vec<Vec<f64>> = prep
            .binned
            .iter()
            .zip(&prep.n_bins)
            .map(|(col, &nb)| bin_step(col, nb, &resid, &weights, cfg.learning_rate))
            .collect();
        for (j, step) in steps.iter().enumerate() {
            for (s, d) in scores[j].iter_mut().zip(step) {
                *s += d;
            }
            for (z, &b) in logits.iter_mut().zip(&prep.binned[j]) {
                *z += step[b as usize];
            }
        }
        trace.push(weighted_loss(&prep.y, &logits, &weights));
        if let Some(st) = stopper.as_mut() {
            let stop = st.observe(round, &logits);
            if st.best_round == round {
                best = (scores.clone(), logits.clone());
            }
            if stop {
                break;
            }
        }
    }
    if let Some(st) = &stopper {
        trace.truncate(st.best_round + 1);
        (scores, logits) = best;
    }
    BagUnivariate {
        intercept,
        scores,
        logits,
        weights,
        holdout,
        trace,
    }
}

/// One boosting step for a pair: a depth-two tree over the pair's fine bins.
/// The first split is on `first_axis` (0 = the pair's first feature); each side
/// may then split once on the other feature. Cut `k` sends bins `<= k` left.
#[derive(Debug, Clone)]
struct PairStep {
    first_axis: usize,
    first: usize,
    second: [Option<usize>; 2],
    values: [[f64; 2]; 2],
}

impl PairStep {
    #[inline]
    fn eval(&self, ia: usize, ib: usize) -> f64 {
        let (u, v) = if self.first_axis == 0 { (ia, ib) } else { (ib, ia) };
        let s = usize::from(u > self.first);
        let t = self.second[s].map_or(0, |k| usize::from(v > k));
        self.values[s][t]
    }

    /// Cuts used on the pair's first and second feature.
    fn cuts(&self) -> (Vec<usize>, Vec<usize>) {
        let seconds: Vec<usize> = self.second.iter().flatten().copied().collect();
        if self.first_axis == 0 {
            (vec![self.first], seconds)
        } else {
            (seconds, vec![self.first])
        }
    }
}

/// Reusable buffers for pair-step search on one pair's grid.
#[derive(Default)]
struct PairScratch {
    g: Vec<f64>,
    h: Vec<f64>,
    /// Two-dimensional prefix sums: `cg[a * nb + b]` sums cells `<= (a, b)`.
    cg: Vec<f64>,
    ch: Vec<f64>,
    /// The same prefix sums transposed, for splitting on the second axis first.
    tg: Vec<f64>,
    th: Vec<f64>,
    scores: Vec<f64>,
    /// Right-hand profile of the current first split.
    rg: Vec<f64>,
    rh: Vec<f64>,
}

impl PairScratch {
    fn reset(&mut self, cells: usize) {
        for v in [&mut self.g, &mut self.h] {
            v.clear();
            v.resize(cells, 0.0);
        }
    }
}

/// Best cut of a 1-D profile given by prefix sums `pg`, `ph` (last entry = total).
/// Returns the cut and the split score `gl^2/hl + gr^2/hr`; `None` (with the
/// unsplit score) when no cut leaves weight on both sides. Ties go to the lowest cut.
fn best_cut_prefix(pg: &[f64], ph: &[f64], scores: &mut Vec<f64>) -> (Option<usize>, f64) {
    let n = pg.len();
    let (gt, ht) = (pg[n - 1], ph[n - 1]);
    let floor = 1e-12 * ht;
    let unsplit = if ht > floor { gt * gt / ht } else { 0.0 };
    scores.resize(n - 1, 0.0);
    // Branch-free pass so the divisions vectorize.
    for ((s, &gl), &hl) in scores.iter_mut().zip(pg).zip(ph) {
        let (gr, hr) = (gt - gl, ht - hl);
        let v = (gl * gl * hr + gr * gr * hl) / (hl * hr);
        *s = if hl > floor && hr > floor { v } else { f64::NEG_INFINITY };
    }
    // Lane-wise maximum first (vectorizes), then the lowest cut within
    // tolerance of it.
    let mut lanes = [f64::NEG_INFINITY; 4];
    let chunks = scores.chunks_exact(4);
    let tail = chunks.remainder();
    for c in chunks {
        for (m, &v) in lanes.iter_mut().zip(c) {
            *m = if v > *m { v } else { *m };
        }
    }
    let max = lanes.iter().chain(tail).fold(f64::NEG_INFINITY, |m, &v| if v > m { v } else { m });
    if !(max > unsplit + 1e-12 * unsplit.abs()) {
        return (None, unsplit);
    }
    let tol = max - 1e-12 * max.abs();
    let k = scores.iter().position(|&v| v >= tol).expect("maximum is attained");
    (Some(k), scores[k])
}

/// Best depth-two partition of a pair grid (row-major `na x nb` sums of `w r`
/// in `scratch.g` and `w` in `scratch.h`), ties resolved toward the first axis
/// and lower cuts.
fn fit_pair_step(scratch: &mut PairScratch, na: usize, nb: usize, lr: f64) -> Option<PairStep> {
    let PairScratch {
        g,
        h,
        cg,
        ch,
        tg,
        th,
        scores,
        rg,
        rh,
    } = scratch;
    // Row prefix, then accumulate rows: no cancellation.
    for (src, dst) in [(&*g, &mut *cg), (&*h, &mut *ch)] {
        dst.clear();
        dst.resize(na * nb, 0.0);
        for a in 0..na {
            let mut run = 0.0;
            for b in 0..nb {
                run += src[a * nb + b];
                let above = if a > 0 { dst[(a - 1) * nb + b] } else { 0.0 };
                dst[a * nb + b] = above + run;
            }
        }
    }
    for (src, dst) in [(&*cg, &mut *tg), (&*ch, &mut *th)] {
        dst.clear();
        dst.resize(na * nb, 0.0);
        for a in 0..na {
            for b in 0..nb {
                dst[b * na + a] = src[a * nb + b];
            }
        }
    }
    let total_h = ch[na * nb - 1];
    let floor = 1e-12 * total_h;
    let mut best: Option<(f64, usize, usize, [Option<usize>; 2])> = None;
    for first_axis in 0..2 {
        // Prefix table laid out as `u * nv + v` with `u` the first-split axis.
        let (nu, nv, pg, ph) = if first_axis == 0 {
            (na, nb, &*cg, &*ch)
        } else {
            (nb, na, &*tg, &*th)
        };
        let last = (nu - 1) * nv..nu * nv;
        let (all_g, all_h) = (&pg[last.clone()], &ph[last]);
        for k in 0..nu.saturating_sub(1) {
            let row = k * nv..(k + 1) * nv;
            let (left_g, left_h) = (&pg[row.clone()], &ph[row]);
            let left_total = left_h[nv - 1];
            if left_total <= floor || total_h - left_total <= floor {
                continue;
            }
            rg.clear();
            rg.extend(all_g.iter().zip(left_g).map(|(a, l)| a - l));
            rh.clear();
            rh.extend(all_h.iter().zip(left_h).map(|(a, l)| a - l));
            let (cl, sl) = best_cut_prefix(left_g, left_h, scores);
            let (cr, sr) = best_cut_prefix(rg, rh, scores);
            let score = sl + sr;
            if best.as_ref().is_none_or(|b| score > b.0 + 1e-12 * b.0.abs()) {
                best = Some((score, first_axis, k, [cl, cr]));
            }
        }
    }
    let (_, first_axis, first, second) = best?;
    let mut step = PairStep {
        first_axis,
        first,
        second,
        values: [[0.0; 2]; 2],
    };
    let mut leaf_g = [[0.0; 2]; 2];
    let mut leaf_h = [[0.0; 2]; 2];
    for ia in 0..na {
        for ib in 0..nb {
            let (u, v) = if first_axis == 0 { (ia, ib) } else { (ib, ia) };
            let s = usize::from(u > first);
            let t = second[s].map_or(0, |k| usize::from(v > k));
            leaf_g[s][t] += g[ia * nb + ib];
            leaf_h[s][t] += h[ia * nb + ib];
        }
    }
    for s in 0..2 {
        for t in 0..2 {
            if leaf_h[s][t] > 0.0 {
                step.values[s][t] = lr * leaf_g[s][t] / leaf_h[s][t];
            }
        }
    }
    Some(step)
}

/// Continues one bag with the selected pairs; univariate terms stay fixed. Every
/// round fits one [`PairStep`] per pair from the same residuals and applies them
/// together.
fn boost_pairs(
    prep: &Prepared,
    grid: &PairBins,
    bag: BagUnivariate,
    pairs: &[(usize, usize)],
    cfg: &EbmConfig,
) -> (Vec<Vec<PairStep>>, Vec<f64>) {
    let BagUnivariate {
        mut logits,
        weights,
        holdout,
        ..
    } = bag;
    let mut steps: Vec<Vec<PairStep>> = vec![Vec::new(); pairs.len()];
    let mut trace = vec![weighted_loss(&prep.y, &logits, &weights)];
    let mut stopper = match (&holdout, cfg.early_stopping) {
        (Some(h), Some(es)) => Some(Stopper::new(&prep.y, h, es.patience, &logits)),
        _ => None,
    };
    let mut best_lengths = vec![0; pairs.len()];
    let mut scratch: Vec<PairScratch> = pairs.iter().map(|_| PairScratch::default()).collect();
    for round in 1..=cfg.pair_rounds() {
        let resid = residuals(&prep.y, &logits);
        let fitted: Vec<Option<PairStep>> = pairs
            .iter()
            .zip(scratch.iter_mut())
            .map(|(&(a, b), sc)| {
                let (na, nb) = (grid.n_bins(a), grid.n_bins(b));
                sc.reset(na * nb);
                for i in 0..resid.len() {
                    if weights[i] > 0.0 {
                        let c = grid.binned[a][i] as usize * nb + grid.binned[b][i] as usize;
                        sc.g[c] += weights[i] * resid[i];
                        sc.h[c] += weights[i];
                    }
                }
                fit_pair_step(sc, na, nb, cfg.learning_rate)
            })
            .collect();
        for (t, step) in fitted.into_iter().enumerate() {
            let Some(step) = step else { continue };
            let (a, b) = pairs[t];
            for (i, z) in logits.iter_mut().enumerate() {
                *z += step.eval(grid.binned[a][i] as usize, grid.binned[b][i] as usize);
            }
            steps[t].push(step);
        }
        trace.push(weighted_loss(&prep.y, &logits, &weights));
        if let Some(st) = stopper.as_mut() {
            let stop = st.observe(round, &logits);
            if st.best_round == round {
                best_lengths = steps.iter().map(Vec::len).collect();
            }
            if stop {
                break;
            }
        }
    }
    if let Some(st) = &stopper {
        trace.truncate(st.best_round + 1);
        for (s, &len) in steps.iter_mut().zip(&best_lengths) {
            s.truncate(len);
        }
    }
    (steps, trace)
}

/// Collapses the bag-averaged pair steps onto a grid spanned by the cuts they use.
fn compress_pair(
    grid: &PairBins,
    (a, b): (usize, usize),
    steps: &[PairStep],
    n_bags: f64,
) -> InteractionTerm {
    let mut used_a = Vec::new();
    let mut used_b = Vec::new();
    for s in steps {
        let (ca, cb) = s.cuts();
        used_a.extend(ca);
        used_b.extend(cb);
    }
    for used in [&mut used_a, &mut used_b] {
        used.sort_unstable();
        used.dedup();
    }
    let coarse_a = FeatureBins {
        cuts: used_a.iter().map(|&k| grid.bins[a].cuts[k]).collect(),
    };
    let coarse_b = FeatureBins {
        cuts: used_b.iter().map(|&k| grid.bins[b].cuts[k]).collect(),
    };
    // Lowest fine bin inside each compressed bin.
    let rep = |used: &[usize], c: usize| if c == 0 { 0 } else { used[c - 1] + 1 };
    let (na, nb) = (coarse_a.n_bins(), coarse_b.n_bins());
    // Every step is a sum of constant rectangles on the fine grid: accumulate
    // them in a difference table, then integrate once.
    let (fa, fb) = (grid.n_bins(a), grid.n_bins(b));
    let mut diff = vec![0.0; (fa + 1) * (fb + 1)];
    let mut add = |a0: usize, a1: usize, b0: usize, b1: usize, v: f64| {
        diff[a0 * (fb + 1) + b0] += v;
        diff[a0 * (fb + 1) + b1] -= v;
        diff[a1 * (fb + 1) + b0] -= v;
        diff[a1 * (fb + 1) + b1] += v;
    };
    for st in steps {
        let (nu, nv) = if st.first_axis == 0 { (fa, fb) } else { (fb, fa) };
        for (side, (u0, u1)) in [(0, st.first + 1), (st.first + 1, nu)].into_iter().enumerate() {
            let parts = match st.second[side] {
                Some(k) => vec![(0, k + 1, 0), (k + 1, nv, 1)],
                None => vec![(0, nv, 0)],
            };
            for (v0, v1, t) in parts {
                let val = st.values[side][t];
                if st.first_axis == 0 {
                    add(u0, u1, v0, v1, val);
                } else {
                    add(v0, v1, u0, u1, val);
                }
            }
        }
    }
    for ia in 0..=fa {
        for ib in 0..=fb {
            let mut v = diff[ia * (fb + 1) + ib];
            if ia > 0 {
                v += diff[(ia - 1) * (fb + 1) + ib];
            }
            if ib > 0 {
                v += diff[ia * (fb + 1) + ib - 1];
            }
            if ia > 0 && ib > 0 {
                v -= diff[(ia - 1) * (fb + 1) + ib - 1];
            }
            diff[ia * (fb + 1) + ib] = v;
        }
    }
    let mut scores = vec![0.0; na * nb];
    for ca in 0..na {
        for cb in 0..nb {
            let (ia, ib) = (rep(&used_a, ca), rep(&used_b, cb));
            scores[ca * nb + cb] = diff[ia * (fb + 1) + ib] / n_bags;
        }
    }
    // Fine bin -> compressed bin is the number of used cuts strictly below it.
    let to_coarse = |used: &[usize], fine: u32| used.partition_point(|&k| k < fine as usize);
    let cells: Vec<u32> = grid.binned[a]
        .iter()
        .zip(&grid.binned[b])
        .map(|(&fa, &fb)| (to_coarse(&used_a, fa) * nb + to_coarse(&used_b, fb)) as u32)
        .collect();
    InteractionTerm {
        features: (a, b),
        bins: (coarse_a, coarse_b),
        bin_weights: counts(&cells, na * nb),
        scores,
    }
}

fn counts(binned: &[u32], n_bins: usize) -> Vec<f64> {
    let mut c = vec![0.0; n_bins];
    for &b in binned {
        c[b as usize] += 1.0;
    }
    c
}

/// Subtracts the weighted mean in place and returns it.
fn center(scores: &mut [f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mean = scores.iter().zip(weights).map(|(s, w)| s * w).sum::<f64>() / total;
    scores.iter_mut().for_each(|s| *s -= mean);
    mean
}

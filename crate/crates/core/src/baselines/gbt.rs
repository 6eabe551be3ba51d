use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::tree::{columns_of, Criterion, TreeBuilder, TreeModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_rounds: usize,
    /// Multiplier on the gradient weight of positive rows.
    pub scale_pos_weight: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            learning_rate: 0.1,
            max_depth: 3,
            n_rounds: 100,
            scale_pos_weight: 10.0,
            min_samples_leaf: 1,
        }
    }
}

/// Stagewise regression trees on logit residuals; leaves hold logit increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Initial logit (weighted base rate).
    pub base_score: f64,
    pub trees: Vec<TreeModel>,
    pub learning_rate: f64,
    pub scale_pos_weight: f64,
    pub n_features: usize,
}

impl GbtModel {
    pub fn logit_row(&self, row: &[f64]) -> f64 {
        let mut z = self.base_score;
        for t in &self.trees {
            z += self.learning_rate * t.predict_row(row);
        }
        z
    }

    pub fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|r| stats::sigmoid(self.logit_row(&r.to_vec())))
            .collect())
    }
}

pub fn train_gbt(ds: &Dataset, cfg: &GbtConfig) -> Result<GbtModel> {
    train_gbt_with_trace(ds, cfg).map(|(m, _)| m)
}

/// Trains the ensemble and returns the weighted training log-loss before the
/// first round and after each round.
///
/// Each round fits a squared-error tree to the residuals `y - p` under the row
/// weights; each leaf holds the weighted mean residual of its rows.
pub fn train_gbt_with_trace(ds: &Dataset, cfg: &GbtConfig) -> Result<(GbtModel, Vec<f64>)> {
    ds.require_both_classes()?;
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::validation(format!("learning_rate must be > 0, got {}", cfg.learning_rate)));
    }
    if !(cfg.scale_pos_weight > 0.0 && cfg.scale_pos_weight.is_finite()) {
        return Err(Error::validation(format!(
            "scale_pos_weight must be > 0, got {}",
            cfg.scale_pos_weight
        )));
    }
    let n = ds.n_rows();
    let y: Vec<f64> = ds.y().iter().map(|&v| f64::from(v)).collect();
    let w: Vec<f64> = y.iter().map(|&v| if v == 1.0 { cfg.scale_pos_weight } else { 1.0 }).collect();
    let total_w: f64 = w.iter().sum();
    let pos_w: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
    let base_p = pos_w / total_w;
    let base_score = (base_p / (1.0 - base_p)).ln();
    let columns = columns_of(ds);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| ds.row(i)).collect();
    let mut logits = vec![base_score; n];
    let loss = |logits: &[f64]| {
        y.iter()
            .zip(logits)
            .zip(&w)
            .map(|((&yi, &z), &wi)| wi * stats::log_loss_logit(yi, z))
            .sum::<f64>()
            / total_w
    };
    let mut trace = vec![loss(&logits)];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    for _ in 0..cfg.n_rounds {
        let resid: Vec<f64> = y.iter().zip(&logits).map(|(&yi, &z)| yi - stats::sigmoid(z)).collect();
        let builder = TreeBuilder {
            columns: &columns,
            target: &resid,
            weight: &w,
            criterion: Criterion::SquaredError,
            max_depth: cfg.max_depth,
            min_samples_split: 2,
            min_samples_leaf: cfg.min_samples_leaf,
            max_features: None,
        };
        let tree = builder.build((0..n).collect(), None);
        for (z, row) in logits.iter_mut().zip(&rows) {
            *z += cfg.learning_rate * tree.predict_row(row);
        }
        if tree.nodes.iter().any(|node| matches!(node, super::TreeNode::Leaf { value } if !value.is_finite())) {
            return Err(Error::Training("gradient boosting produced a non-finite leaf".into()));
        }
        trees.push(tree);
        trace.push(loss(&logits));
    }
    Ok((
        GbtModel {
            base_score,
            trees,
            learning_rate: cfg.learning_rate,
            scale_pos_weight: cfg.scale_pos_weight,
            n_features: ds.n_features(),
        },
        trace,
    ))
}

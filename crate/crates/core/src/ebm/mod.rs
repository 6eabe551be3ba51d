//! Explainable boosting machine: binned univariate shape functions plus selected
//! pairwise interaction grids, trained by low-learning-rate cyclic boosting under
//! a logistic link.
//!
//! The logit of a row is `intercept + sum_j f_j(x_j) + sum_(i,j) f_ij(x_i, x_j)`,
//! accumulated in that order (univariate terms by feature index, then pairs in
//! model order). [`EbmModel::predict_logit`] and [`EbmModel::explain_local`] share
//! the accumulation so the two agree exactly.

mod binning;
mod explain;
mod interactions;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub use binning::{build_bins, build_feature_bins, BinDefinition, FeatureBins};
pub use explain::{GlobalExplanation, LocalExplanation, TermContribution, TermImportance, TermKind};
pub use interactions::{detect_interactions, rank_interactions, InteractionCandidate};
pub use train::{train_ebm, train_ebm_with_trace, TrainingTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbmConfig {
    pub max_bins: usize,
    pub learning_rate: f64,
    pub max_rounds: usize,
    pub interactions: usize,
    pub outer_bags: usize,
    pub min_samples_bin: usize,
    /// Coarse bins per axis used to score candidate pairs.
    pub interaction_grid: usize,
    /// Quantile bins per feature available to pair-term splits.
    #[serde(default = "default_interaction_bins")]
    pub max_interaction_bins: usize,
    /// Gradient weights for (negative, positive) rows.
    pub class_weight: (f64, f64),
    pub seed: u64,
    /// Optional validation-based stop; `None` runs every round.
    #[serde(default)]
    pub early_stopping: Option<EarlyStopping>,
}

/// Holds out a random share of every bag's rows and stops a stage once their
/// log-loss has not improved for `patience` rounds, keeping the best round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub validation_fraction: f64,
    pub patience: usize,
}

fn default_interaction_bins() -> usize {
    128
}

impl Default for EbmConfig {
    fn default() -> Self {
        EbmConfig {
            max_bins: 256,
            learning_rate: 0.05,
            max_rounds: 100,
            interactions: 20,
            outer_bags: 8,
            min_samples_bin: 2,
            interaction_grid: 16,
            max_interaction_bins: default_interaction_bins(),
            class_weight: (1.0, 1.0),
            seed: 0,
            early_stopping: None,
        }
    }
}

impl EbmConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::validation(m));
        if self.max_bins < 2 {
            return fail(format!("max_bins must be >= 2, got {}", self.max_bins));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.max_rounds < 1 {
            return fail("max_rounds must be >= 1".into());
        }
        if self.outer_bags < 1 {
            return fail("outer_bags must be >= 1".into());
        }
        if self.min_samples_bin < 1 {
            return fail("min_samples_bin must be >= 1".into());
        }
        if self.max_interaction_bins < 2 {
            return fail(format!(
                "max_interaction_bins must be >= 2, got {}",
                self.max_interaction_bins
            ));
        }
        if self.interaction_grid < 2 {
            return fail(format!(
                "interaction_grid must be >= 2, got {}",
                self.interaction_grid
            ));
        }
        let (w0, w1) = self.class_weight;
        if !(w0 > 0.0 && w1 > 0.0 && w0.is_finite() && w1.is_finite()) {
            return fail(format!("class weights must be positive, got ({w0}, {w1})"));
        }
        if let Some(es) = self.early_stopping {
            if !(es.validation_fraction > 0.0 && es.validation_fraction < 1.0) {
                return fail(format!(
                    "early-stopping validation_fraction must be in (0, 1), got {}",
                    es.validation_fraction
                ));
            }
            if es.patience < 1 {
                return fail("early-stopping patience must be >= 1".into());
            }
        }
        Ok(())
    }

    /// Boosting rounds for the pair stage.
    pub fn pair_rounds(&self) -> usize {
        self.max_rounds
    }
}

/// Per-bin additive scores (log-odds) for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    pub feature: usize,
    pub scores: Vec<f64>,
    /// Training rows per bin.
    pub bin_weights: Vec<f64>,
}

/// Row-major grid of additive scores for a feature pair. The grid's cuts are the
/// subset of each feature's bin cuts that the pair's boosting steps split on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTerm {
    pub features: (usize, usize),
    pub bins: (FeatureBins, FeatureBins),
    pub scores: Vec<f64>,
    pub bin_weights: Vec<f64>,
}

impl InteractionTerm {
    #[inline]
    pub fn cell(&self, a: f64, b: f64) -> usize {
        self.bins.0.bin(a) * self.bins.1.n_bins() + self.bins.1.bin(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbmModel {
    pub feature_names: Vec<String>,
    pub intercept: f64,
    pub bins: BinDefinition,
    pub univariate: Vec<ShapeFunction>,
    pub pairs: Vec<InteractionTerm>,
    /// Mean absolute score per term (univariate terms, then pairs).
    pub importances: Vec<f64>,
    pub config: EbmConfig,
}

impl EbmModel {
    /// A model with no features; every prediction is `sigmoid(intercept)`.
    pub fn intercept_only(intercept: f64) -> Self {
        EbmModel {
            feature_names: Vec::new(),
            intercept,
            bins: BinDefinition {
                features: Vec::new(),
            },
            univariate: Vec::new(),
            pairs: Vec::new(),
            importances: Vec::new(),
            config: EbmConfig::default(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_terms(&self) -> usize {
        self.univariate.len() + self.pairs.len()
    }

    pub fn term_name(&self, term: usize) -> String {
        if term < self.univariate.len() {
            self.feature_names[self.univariate[term].feature].clone()
        } else {
            let (i, j) = self.pairs[term - self.univariate.len()].features;
            format!("{} & {}", self.feature_names[i], self.feature_names[j])
        }
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        Ok(())
    }

    /// Signed contribution of every term, in term order.
    pub fn term_contributions(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        Ok(self.contributions_unchecked(row))
    }

    fn contributions_unchecked(&self, row: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_terms());
        for shape in &self.univariate {
            let bin = self.bins.features[shape.feature].bin(row[shape.feature]);
            out.push(shape.scores[bin]);
        }
        for pair in &self.pairs {
            let (i, j) = pair.features;
            out.push(pair.scores[pair.cell(row[i], row[j])]);
        }
        out
    }

    /// Fixed-order accumulation shared by prediction and local explanations.
    fn accumulate(&self, contributions: &[f64]) -> f64 {
        let mut logit = self.intercept;
        for c in contributions {
            logit += c;
        }
        logit
    }

    pub fn predict_logit(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        Ok(self.accumulate(&self.contributions_unchecked(row)))
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        Ok(stats::sigmoid(self.predict_logit(row)?))
    }

    pub fn predict_class(&self, row: &[f64], threshold: f64) -> Result<u8> {
        Ok(u8::from(self.predict_proba(row)? >= threshold))
    }

    pub fn predict_proba_matrix(&self, x: &ndarray::Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.ncols(),
            });
        }
        Ok(x
            .rows()
            .into_iter()
            .map(|r| {
                let row = r.to_vec();
                stats::sigmoid(self.accumulate(&self.contributions_unchecked(&row)))
            })
            .collect())
    }

    /// Training-weighted mean absolute score of every term, in term order.
    pub fn compute_importances(&self) -> Vec<f64> {
        let weighted_abs = |scores: &[f64], weights: &[f64]| {
            let total: f64 = weights.iter().sum();
            if total == 0.0 {
                return 0.0;
            }
            scores.iter().zip(weights).map(|(s, w)| s.abs() * w).sum::<f64>() / total
        };
        self.univariate
            .iter()
            .map(|s| weighted_abs(&s.scores, &s.bin_weights))
            .chain(self.pairs.iter().map(|p| weighted_abs(&p.scores, &p.bin_weights)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_probabilities() {
        assert_eq!(EbmModel::intercept_only(0.0).predict_proba(&[]).unwrap(), 0.5);
        let p = EbmModel::intercept_only(9f64.ln()).predict_proba(&[]).unwrap();
        assert!((p - 0.9).abs() < 1e-15);
        assert!(matches!(
            EbmModel::intercept_only(0.0).predict_logit(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(EbmConfig::default().validate().is_ok());
        let bad = [
            EbmConfig { max_bins: 1, ..Default::default() },
            EbmConfig { learning_rate: 0.0, ..Default::default() },
            EbmConfig { max_rounds: 0, ..Default::default() },
            EbmConfig { outer_bags: 0, ..Default::default() },
            EbmConfig { interaction_grid: 1, ..Default::default() },
            EbmConfig { max_interaction_bins: 1, ..Default::default() },
            EbmConfig { class_weight: (1.0, -1.0), ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}

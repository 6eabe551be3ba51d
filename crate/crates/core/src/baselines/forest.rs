use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{class_weights, columns_of, Criterion, MaxFeatures, TreeBuilder, TreeModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Weights for (negative, positive) rows.
    pub class_weight: (f64, f64),
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 200,
            max_depth: 10,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            min_samples_leaf: 1,
            class_weight: (1.0, 1.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    /// Seed each tree's bootstrap and feature sampling was drawn from.
    pub tree_seeds: Vec<u64>,
    pub max_features: MaxFeatures,
    pub n_features: usize,
}

impl ForestModel {
    /// Mean of the trees' leaf probabilities.
    pub fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        let k = self.trees.len() as f64;
        Ok(x.rows()
            .into_iter()
            .map(|r| {
                let row = r.to_vec();
                self.trees.iter().map(|t| t.predict_row(&row)).sum::<f64>() / k
            })
            .collect())
    }
}

/// Seed of tree `t` in a forest trained with master seed `seed`.
pub fn forest_tree_seed(seed: u64, t: usize) -> u64 {
    stats::derive_seed(seed, 0xF0, t as u64)
}

/// One CART tree grown on a bootstrap sample with random feature subsets per
/// split, both drawn from `tree_seed`.
pub fn bootstrap_tree(ds: &Dataset, cfg: &ForestConfig, tree_seed: u64) -> Result<TreeModel> {
    ds.require_both_classes()?;
    let columns = columns_of(ds);
    let target: Vec<f64> = ds.y().iter().map(|&v| f64::from(v)).collect();
    let weight = class_weights(ds, cfg.class_weight);
    Ok(grow(&columns, &target, &weight, cfg, tree_seed))
}

fn grow(columns: &[Vec<f64>], target: &[f64], weight: &[f64], cfg: &ForestConfig, tree_seed: u64) -> TreeModel {
    let n = target.len();
    let mut rng = stats::rng(tree_seed);
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let builder = TreeBuilder {
        columns,
        target,
        weight,
        criterion: Criterion::Gini,
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: Some(cfg.max_features.resolve(columns.len())),
    };
    builder.build(rows, Some(&mut rng))
}

/// Bagged CART ensemble; trees are grown in parallel from per-tree seeds.
pub fn train_forest(ds: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    ds.require_both_classes()?;
    if cfg.n_estimators == 0 {
        return Err(Error::validation("n_estimators must be >= 1"));
    }
    let columns = columns_of(ds);
    let target: Vec<f64> = ds.y().iter().map(|&v| f64::from(v)).collect();
    let weight = class_weights(ds, cfg.class_weight);
    let tree_seeds: Vec<u64> = (0..cfg.n_estimators).map(|t| forest_tree_seed(cfg.seed, t)).collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| grow(&columns, &target, &weight, cfg, s))
        .collect();
    Ok(ForestModel {
        trees,
        tree_seeds,
        max_features: cfg.max_features,
        n_features: ds.n_features(),
    })
}

use ndarray::Array2;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Impurity used to score candidate splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Class-weighted Gini on 0/1 targets.
    Gini,
    /// Weighted squared error on real targets.
    SquaredError,
}

impl Criterion {
    /// Weighted impurity (impurity times total weight) from node sums.
    #[inline]
    fn weighted_impurity(self, w: f64, s: f64, q: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        match self {
            Criterion::Gini => 2.0 * s * (w - s) / w,
            Criterion::SquaredError => q - s * s / w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        match self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => ((p as f64).sqrt().ceil() as usize).clamp(1, p.max(1)),
            MaxFeatures::Count(c) => c.clamp(1, p.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Weights for (negative, positive) rows.
    pub class_weight: (f64, f64),
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 5,
            min_samples_split: 50,
            min_samples_leaf: 20,
            class_weight: (1.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary tree stored as an arena; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
}

impl TreeModel {
    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        Ok(x.rows().into_iter().map(|r| self.predict_row(&r.to_vec())).collect())
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// Greedy CART builder over column-major features, per-row targets and weights.
pub(crate) struct TreeBuilder<'a> {
    pub columns: &'a [Vec<f64>],
    pub target: &'a [f64],
    pub weight: &'a [f64],
    pub criterion: Criterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Random feature subset size per node; `None` scans every feature.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    /// Number of rows going left in the sorted order.
    left_count: usize,
}

impl<'a> TreeBuilder<'a> {
    pub fn build(&self, rows: Vec<usize>, rng: Option<&mut ChaCha8Rng>) -> TreeModel {
        let mut nodes = Vec::new();
        let mut rng = rng;
        self.grow(rows, 0, &mut nodes, &mut rng);
        TreeModel {
            nodes,
            n_features: self.columns.len(),
        }
    }

    fn sums(&self, rows: &[usize]) -> (f64, f64, f64) {
        let (mut w, mut s, mut q) = (0.0, 0.0, 0.0);
        for &i in rows {
            let (wi, ti) = (self.weight[i], self.target[i]);
            w += wi;
            s += wi * ti;
            q += wi * ti * ti;
        }
        (w, s, q)
    }

    fn grow(&self, rows: Vec<usize>, depth: usize, nodes: &mut Vec<TreeNode>, rng: &mut Option<&mut ChaCha8Rng>) -> usize {
        let (w, s, _) = self.sums(&rows);
        let leaf_value = if w > 0.0 { s / w } else { 0.0 };
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf { value: leaf_value });
        if depth >= self.max_depth || rows.len() < self.min_samples_split.max(2) {
            return idx;
        }
        let features: Vec<usize> = match (self.max_features, rng.as_deref_mut()) {
            (Some(m), Some(r)) if m < self.columns.len() => {
                let mut f = sample(r, self.columns.len(), m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.columns.len()).collect(),
        };
        let Some((choice, sorted)) = self.best_split(&rows, &features) else {
            return idx;
        };
        let (left_rows, right_rows) = sorted.split_at(choice.left_count);
        let (left_rows, right_rows) = (left_rows.to_vec(), right_rows.to_vec());
        drop(rows);
        let left = self.grow(left_rows, depth + 1, nodes, rng);
        let right = self.grow(right_rows, depth + 1, nodes, rng);
        nodes[idx] = TreeNode::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
        };
        idx
    }

    /// Best split over `features`, ties broken by (feature, threshold) ascending.
    /// Returns the rows sorted by the winning feature.
    pub(crate) fn best_split(&self, rows: &[usize], features: &[usize]) -> Option<(SplitChoice, Vec<usize>)> {
        let (w, s, q) = self.sums(rows);
        let parent = self.criterion.weighted_impurity(w, s, q);
        let eps = 1e-12 * parent.abs().max(1e-300);
        let mut best: Option<(SplitChoice, Vec<usize>)> = None;
        let min_leaf = self.min_samples_leaf.max(1);
        let m = rows.len();
        for &f in features {
            let col = &self.columns[f];
            let mut sorted = rows.to_vec();
            sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let (mut lw, mut ls, mut lq) = (0.0, 0.0, 0.0);
            let mut local: Option<SplitChoice> = None;
            for k in 0..m - 1 {
                let i = sorted[k];
                let (wi, ti) = (self.weight[i], self.target[i]);
                lw += wi;
                ls += wi * ti;
                lq += wi * ti * ti;
                let (v, next) = (col[i], col[sorted[k + 1]]);
                if v == next || k + 1 < min_leaf || m - k - 1 < min_leaf {
                    continue;
                }
                let child = self.criterion.weighted_impurity(lw, ls, lq)
                    + self.criterion.weighted_impurity(w - lw, s - ls, q - lq);
                let gain = parent - child;
                let better = match (&local, &best) {
                    (Some(l), _) => gain > l.gain + eps,
                    (None, Some((b, _))) => gain > b.gain + eps,
                    (None, None) => gain > eps,
                };
                if better {
                    let mut threshold = 0.5 * (v + next);
                    if threshold >= next {
                        threshold = v;
                    }
                    local = Some(SplitChoice {
                        feature: f,
                        threshold,
                        gain,
                        left_count: k + 1,
                    });
                }
            }
            if let Some(l) = local {
                if best.as_ref().is_none_or(|(b, _)| l.gain > b.gain + eps) {
                    best = Some((l, sorted));
                }
            }
        }
        best
    }
}

pub(crate) fn columns_of(ds: &Dataset) -> Vec<Vec<f64>> {
    (0..ds.n_features()).map(|j| ds.column(j)).collect()
}

pub(crate) fn class_weights(ds: &Dataset, cw: (f64, f64)) -> Vec<f64> {
    ds.y().iter().map(|&v| if v == 1 { cw.1 } else { cw.0 }).collect()
}

/// Single CART classifier with class-weighted Gini; leaves hold the weighted
/// positive fraction.
pub fn train_tree(ds: &Dataset, cfg: &TreeConfig) -> Result<TreeModel> {
    ds.require_both_classes()?;
    let columns = columns_of(ds);
    let target: Vec<f64> = ds.y().iter().map(|&v| f64::from(v)).collect();
    let weight = class_weights(ds, cfg.class_weight);
    let builder = TreeBuilder {
        columns: &columns,
        target: &target,
        weight: &weight,
        criterion: Criterion::Gini,
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: None,
    };
    Ok(builder.build((0..ds.n_rows()).collect(), None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn depth_zero_is_base_rate() {
        let ds = Dataset::from_parts(array![[0.0], [1.0], [2.0], [3.0]], vec![0, 0, 0, 1]).unwrap();
        let cfg = TreeConfig {
            max_depth: 0,
            min_samples_split: 2,
            min_samples_leaf: 1,
            class_weight: (1.0, 1.0),
        };
        let tree = train_tree(&ds, &cfg).unwrap();
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { value: 0.25 }]);
    }

    #[test]
    fn large_min_leaf_forces_single_leaf() {
        let ds = Dataset::from_parts(array![[0.0], [1.0], [2.0], [3.0]], vec![0, 0, 1, 1]).unwrap();
        let cfg = TreeConfig {
            max_depth: 5,
            min_samples_split: 2,
            min_samples_leaf: 3,
            class_weight: (1.0, 1.0),
        };
        assert_eq!(train_tree(&ds, &cfg).unwrap().n_leaves(), 1);
    }

    #[test]
    fn recovers_threshold_at_depth_one() {
        let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64);
        let y = (0..20).map(|i| u8::from(i >= 12)).collect();
        let ds = Dataset::from_parts(x, y).unwrap();
        let cfg = TreeConfig {
            max_depth: 1,
            min_samples_split: 2,
            min_samples_leaf: 1,
            class_weight: (1.0, 1.0),
        };
        let tree = train_tree(&ds, &cfg).unwrap();
        match tree.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 11.5);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn single_class_rejected() {
        let ds = Dataset::from_parts(array![[0.0], [1.0]], vec![1, 1]).unwrap();
        assert!(train_tree(&ds, &TreeConfig::default()).is_err());
    }

    #[test]
    fn sqrt_rule() {
        assert_eq!(MaxFeatures::Sqrt.resolve(18), 5);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Count(50).resolve(4), 4);
    }
}

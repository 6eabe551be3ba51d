//! Comparison classifiers: L2 logistic regression, CART, a bagged random forest
//! and gradient-boosted regression trees.

mod forest;
mod gbt;
mod logistic;
mod tree;

pub use forest::{bootstrap_tree, forest_tree_seed, train_forest, ForestConfig, ForestModel};
pub use gbt::{train_gbt, train_gbt_with_trace, GbtConfig, GbtModel};
pub use logistic::{normalized_gradient, train_logreg, LinearModel, LogRegConfig};
pub use tree::{train_tree, Criterion, MaxFeatures, TreeConfig, TreeModel, TreeNode};

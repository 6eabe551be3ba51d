//! Glass-box binary classification for imbalanced tabular data.
//!
//! The centre of the crate is an explainable boosting machine ([`ebm`]): one
//! shape function per feature plus a few automatically detected pair terms, so
//! every prediction is an intercept plus readable per-term contributions.
//! Around it:
//!
//! - [`eda`]: Pearson, Spearman, Kendall and Chatterjee correlation matrices and
//!   variance inflation factors with bootstrap intervals.
//! - [`scaling`]: five scalers and ordered scaler sequences, always fitted on
//!   training rows only.
//! - [`doe`]: Taguchi orthogonal arrays, signal-to-noise ratios and main-effects
//!   selection for scaler sequences and hyperparameters.
//! - [`baselines`]: logistic regression, CART, random forest and gradient
//!   boosted trees, behind the common [`model::ModelSpec`].
//! - [`metrics`]: ROC-AUC, precision, recall, F1 and the overfitting gap.
//! - [`pipeline`]: the reproducible, manifest-driven commands the `glassbox`
//!   binary exposes.
//!
//! ```no_run
//! use glassbox::ebm::{train_ebm, EbmConfig};
//!
//! let ds = glassbox::synth::xor(2000, 2, 1)?;
//! let model = train_ebm(&ds, &EbmConfig { interactions: 1, ..EbmConfig::default() })?;
//! let why = model.explain_local(&ds.row(0))?;
//! println!("p = {:.3}, top term {}", why.proba, why.sorted_by_magnitude()[0].term);
//! # Ok::<(), glassbox::error::Error>(())
//! ```

pub mod baselines;
pub mod dataset;
pub mod doe;
pub mod ebm;
pub mod eda;
pub mod error;
mod linalg;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod scaling;
pub mod stats;
pub mod synth;

//! Trains a scaled pipeline, saves it as versioned JSON, loads it back and
//! checks that the reloaded pipeline predicts identically.
//!
//! ```text
//! cargo run --release --example model_io -- /tmp/model.json
//! ```

use std::path::PathBuf;

use glassbox::model::{load_model, save_model, Classifier, ModelSpec};
use glassbox::pipeline::{cmd_train, Preprocessing, RunContext};
use glassbox::scaling::{ScalerKind, ScalerSequence};
use glassbox::synth;

fn main() -> glassbox::error::Result<()> {
    let path = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "model.json".into()));
    let ds = synth::imbalanced_blobs(1000, 100, 5, 2, 1.5, 6)?;

    let prep = Preprocessing {
        features: Some(vec!["x0".into(), "x1".into(), "x3".into()]),
        scalers: ScalerSequence::single(ScalerKind::Standard { with_mean: true, with_std: true })?,
        scaler_columns: None,
    };
    let ctx = RunContext { seed: 42, ..RunContext::default() };
    let (pipeline, report) = cmd_train(&ds, &ModelSpec::from_name("logreg")?, &prep, &ctx)?;
    println!("cross-validated ROC-AUC {:.4}", report.aggregate.roc_auc);
    println!("model inputs: {}", pipeline.model_feature_names().join(", "));

    save_model(&path, &pipeline)?;
    let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    println!("saved {} ({bytes} bytes)", path.display());

    let reloaded = load_model(&path)?;
    // Pipelines take rows shaped like the source data and select their own columns.
    let before = pipeline.predict_proba(ds.x())?;
    let after = reloaded.predict_proba(ds.x())?;
    let identical = before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("reloaded predictions bit-identical on {} rows: {identical}", before.len());
    Ok(())
}

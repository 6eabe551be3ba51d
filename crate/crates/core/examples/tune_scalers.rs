//! Searches scaler sequences with an L25 orthogonal array.
//!
//! Each of the 25 rows names one scaler (or no-op) for each of five slots. Every
//! row is cross-validated on the same folds; the report keeps the best observed
//! row and the main-effect prediction of the best level per slot.
//!
//! ```text
//! cargo run --release --example tune_scalers
//! ```

use glassbox::model::ModelSpec;
use glassbox::pipeline::{cmd_tune_scalers, prepare, RunContext};
use glassbox::scaling::ScalerParams;
use glassbox::synth;

fn main() -> glassbox::error::Result<()> {
    let ds = synth::imbalanced_blobs(1500, 75, 6, 3, 1.2, 21)?;
    // Logistic regression is the scaler-sensitive learner; trees would not care.
    let model = ModelSpec::from_name("logreg")?;
    let ctx = RunContext { seed: 7, ..RunContext::default() };
    let report = cmd_tune_scalers("L25", &model, &ScalerParams::default(), &prepare(&ds, None, None)?, &ctx)?;

    println!("{:>3}  {:<44} {:>8} {:>8}", "row", "sequence", "mean AUC", "S/N dB");
    for r in &report.rows {
        let seq = r.config.as_ref().map(|c| c.scalers.describe()).unwrap_or_default();
        match (r.mean, r.sn_ratio) {
            (Some(m), Some(sn)) => println!("{:>3}  {:<44} {:>8.4} {:>8.3}", r.row + 1, seq, m, sn),
            _ => println!("{:>3}  {:<44} failed: {}", r.row + 1, seq, r.error.as_deref().unwrap_or("?")),
        }
    }
    println!();
    println!(
        "adopted row {}: {} (mean AUC {:.4})",
        report.adopted_row + 1,
        report.adopted.describe(),
        report.adopted_mean_roc_auc
    );
    println!("main-effect best levels per slot: {:?}", report.selection.predicted_best_levels);
    println!(
        "{} configurations, {} model fits",
        report.configurations_trained, report.model_fits
    );
    Ok(())
}

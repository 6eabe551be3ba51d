//! Ranks features by EBM importance, then cross-validates the top-k subset for
//! each k and keeps the smallest k with the best mean ROC-AUC.
//!
//! ```text
//! cargo run --release --example feature_sweep
//! ```

use glassbox::model::ModelSpec;
use glassbox::pipeline::{cmd_feature_sweep, Preprocessing, RunContext};
use glassbox::synth;
use serde_json::json;

fn main() -> glassbox::error::Result<()> {
    // Four informative features hidden among eight noise columns.
    let ds = synth::monotone_informative(1500, 4, 8, 2.0, -0.5, 9)?;
    let mut ebm = ModelSpec::from_name("ebm")?;
    for (name, value) in [("max_bins", 32), ("max_rounds", 60), ("outer_bags", 2), ("interactions", 0)] {
        ebm.set_param(name, &json!(value))?;
    }
    ebm.set_param("learning_rate", &json!(0.1))?;

    let ctx = RunContext { seed: 42, ..RunContext::default() };
    let report = cmd_feature_sweep(&ds, &ebm, 1, None, false, &Preprocessing::default(), &ctx)?;

    println!("ranking: {}", report.ranking.join(" > "));
    println!("\n{:>3} {:>8}  features", "k", "mean AUC");
    for row in &report.rows {
        let mark = if row.k == report.chosen_k { "  <- chosen" } else { "" };
        println!("{:>3} {:>8.4}  {}{mark}", row.k, row.metrics.roc_auc, row.features.join(","));
    }
    println!(
        "\nchosen k = {} (AUC {:.4}): {}",
        report.chosen_k,
        report.chosen_roc_auc,
        report.selected_features.join(", ")
    );
    Ok(())
}

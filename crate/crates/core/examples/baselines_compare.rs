//! Cross-validates the EBM and the four baselines on identical folds.
//!
//! ```text
//! cargo run --release --example baselines_compare
//! ```

use glassbox::model::{ModelSpec, MODEL_NAMES};
use glassbox::pipeline::{cmd_compare, Preprocessing, RunContext};
use glassbox::synth;
use serde_json::json;

fn main() -> glassbox::error::Result<()> {
    let ds = synth::imbalanced_blobs(3000, 150, 8, 4, 1.2, 17)?;
    let mut models = MODEL_NAMES
        .iter()
        .map(|name| ModelSpec::from_name(name))
        .collect::<glassbox::error::Result<Vec<_>>>()?;
    // Lighter than the defaults so the example finishes in seconds.
    models[0].set_param("outer_bags", &json!(4))?;
    models[3].set_param("n_estimators", &json!(60))?;

    let ctx = RunContext { seed: 42, ..RunContext::default() };
    let report = cmd_compare(&ds, &models, &Preprocessing::default(), &ctx)?;

    println!(
        "{:<24} {:>8} {:>9} {:>7} {:>7}",
        "model", "ROC-AUC", "precision", "recall", "F1"
    );
    for row in &report.rows {
        match &row.aggregate {
            Some(m) => println!(
                "{:<24} {:>8.4} {:>9.4} {:>7.4} {:>7.4}",
                row.display_name, m.roc_auc, m.precision, m.recall, m.f1
            ),
            None => println!("{:<24} failed: {}", row.display_name, row.error.as_deref().unwrap_or("?")),
        }
    }
    let same = report.rows.windows(2).all(|w| w[0].fold_assignment == w[1].fold_assignment);
    println!("\nall models used the same folds: {same}");
    Ok(())
}

//! Train-versus-test gap under cross-validation for a regularised model on real
//! signal and an unrestricted tree on pure noise.
//!
//! ```text
//! cargo run --release --example overfit_check
//! ```

use glassbox::metrics::{Metric, DEFAULT_OVERFIT_THRESHOLD};
use glassbox::model::ModelSpec;
use glassbox::pipeline::{cmd_check_overfit, Preprocessing, RunContext};
use glassbox::synth;
use serde_json::json;

fn main() -> glassbox::error::Result<()> {
    let ctx = RunContext { seed: 1, ..RunContext::default() };
    let prep = Preprocessing::default();

    let signal = synth::imbalanced_blobs(800, 200, 6, 3, 1.5, 2)?;
    let logreg = ModelSpec::from_name("logreg")?;

    // Separation 0: the label is independent of every feature.
    let noise = synth::imbalanced_blobs(800, 200, 6, 3, 0.0, 2)?;
    let mut deep_tree = ModelSpec::from_name("tree")?;
    deep_tree.set_param("max_depth", &json!(40))?;
    deep_tree.set_param("min_samples_split", &json!(2))?;
    deep_tree.set_param("min_samples_leaf", &json!(1))?;

    for (label, ds, model) in [("logreg on signal", &signal, &logreg), ("deep tree on noise", &noise, &deep_tree)] {
        let run = cmd_check_overfit(ds, model, Metric::RocAuc, DEFAULT_OVERFIT_THRESHOLD, &prep, &ctx)?;
        println!("{label}:");
        for f in &run.folds {
            println!("  fold {}  train {:.4}  test {:.4}", f.fold, f.train, f.test);
        }
        let r = &run.report;
        println!(
            "  gap {:.4} (threshold {}) -> {}\n",
            r.gap,
            r.threshold,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}

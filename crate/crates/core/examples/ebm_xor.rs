//! An explainable boosting machine on XOR, where no single feature carries
//! signal and only a pair term can.
//!
//! Compares a main-effects-only model with one allowed two pair terms, shows the
//! detected interaction ranking and the per-round training loss, and finishes
//! with validation-based early stopping.
//!
//! ```text
//! cargo run --release --example ebm_xor
//! ```

use glassbox::dataset::Dataset;
use glassbox::ebm::{train_ebm, train_ebm_with_trace, EarlyStopping, EbmConfig, EbmModel};
use glassbox::metrics::roc_auc;
use glassbox::synth;

fn held_out_auc(model: &EbmModel, test: &Dataset) -> glassbox::error::Result<f64> {
    roc_auc(test.y(), &model.predict_proba_matrix(test.x())?)
}

fn main() -> glassbox::error::Result<()> {
    // x0 and x1 decide the label; x2..x4 are distractors.
    let train = synth::xor(3000, 3, 1)?;
    let test = synth::xor(2000, 3, 2)?;

    let base = EbmConfig {
        max_bins: 64,
        max_rounds: 150,
        learning_rate: 0.1,
        outer_bags: 4,
        seed: 5,
        ..EbmConfig::default()
    };

    let mains = train_ebm(&train, &EbmConfig { interactions: 0, ..base.clone() })?;
    println!("main effects only: held-out AUC {:.4}", held_out_auc(&mains, &test)?);

    let (model, trace) = train_ebm_with_trace(&train, &EbmConfig { interactions: 2, ..base.clone() })?;
    println!("with 2 pair terms: held-out AUC {:.4}", held_out_auc(&model, &test)?);

    println!("\ninteraction ranking (residual SSE reduction beyond additive):");
    for c in trace.interaction_ranking.iter().take(4) {
        println!("  ({}, {})  {:.3}", train.feature_names()[c.pair.0], train.feature_names()[c.pair.1], c.score);
    }
    let bag0 = &trace.univariate[0];
    let pairs0 = &trace.pairs[0];
    println!(
        "\nbag 0 training log-loss: {:.4} -> {:.4} (main effects) -> {:.4} (pairs)",
        bag0[0],
        bag0[bag0.len() - 1],
        pairs0[pairs0.len() - 1]
    );

    println!("\nterm importances:");
    for t in model.explain_global().terms {
        println!("  {:<10} {:.4}", t.term, t.importance);
    }

    let stopped = EbmConfig {
        interactions: 2,
        max_rounds: 1000,
        early_stopping: Some(EarlyStopping {
            validation_fraction: 0.15,
            patience: 20,
        }),
        ..base
    };
    let (model, trace) = train_ebm_with_trace(&train, &stopped)?;
    println!(
        "\nearly stopping (budget 1000 rounds): bag 0 ran {} main-effect and {} pair rounds, held-out AUC {:.4}",
        trace.univariate[0].len() - 1,
        trace.pairs[0].len().saturating_sub(1),
        held_out_auc(&model, &test)?
    );
    Ok(())
}

//! Global and local explanations of a trained EBM.
//!
//! The global view ranks terms by mean absolute contribution. The local view
//! breaks one prediction into intercept plus per-term log-odds, which add up to
//! the model's logit exactly.
//!
//! ```text
//! cargo run --release --example explain
//! ```

use glassbox::ebm::{train_ebm, EbmConfig};
use glassbox::stats::sigmoid;
use glassbox::synth;

fn main() -> glassbox::error::Result<()> {
    let ds = synth::monotone_informative(2000, 3, 3, 2.0, -0.5, 4)?;
    let cfg = EbmConfig {
        max_bins: 32,
        max_rounds: 80,
        learning_rate: 0.1,
        outer_bags: 4,
        interactions: 2,
        ..EbmConfig::default()
    };
    let model = train_ebm(&ds, &cfg)?;

    let global = model.explain_global();
    println!("global importance:");
    for t in &global.terms {
        println!("  {:<10} {:.4}", t.term, t.importance);
    }
    let top: Vec<&str> = model
        .top_k_features(3)?
        .into_iter()
        .map(|j| ds.feature_names()[j].as_str())
        .collect();
    println!("top 3 features: {}", top.join(", "));

    let row = ds.row(0);
    let local = model.explain_local(&row)?;
    println!("\nrow 0 (label {}), proba {:.4}:", ds.y()[0], local.proba);
    println!("  {:<10} {:>+8.4}", "intercept", local.intercept);
    for c in local.sorted_by_magnitude() {
        let push = if c.contribution >= 0.0 { "toward 1" } else { "toward 0" };
        println!("  {:<10} {:>+8.4}  {push}", c.term, c.contribution);
    }
    let total = local.intercept + local.contributions.iter().map(|c| c.contribution).sum::<f64>();
    println!(
        "  sum {:+.4} = logit {:+.4}; sigmoid(sum) = {:.4}",
        total,
        local.logit,
        sigmoid(total)
    );
    println!("\nas CSV:\n{}", local.to_csv());
    Ok(())
}

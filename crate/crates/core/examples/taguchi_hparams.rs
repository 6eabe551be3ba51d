//! Hyperparameter search with an L9 array against the exhaustive 3^4 grid.
//!
//! The array runs 9 of the 81 combinations. Main-effects analysis of the
//! signal-to-noise ratios then predicts the best level of each factor, which can
//! be a combination the array never ran.
//!
//! ```text
//! cargo run --release --example taguchi_hparams
//! ```

use glassbox::doe::{
    default_levels, hyperparameter_mapper, main_effects_select, named_oa, run_experiment, AucTrainer, OrthogonalArray,
};
use glassbox::model::ModelSpec;
use glassbox::pipeline::{describe_settings, RunContext};
use glassbox::scaling::ScalerSequence;
use glassbox::synth;

fn main() -> glassbox::error::Result<()> {
    let ds = synth::imbalanced_blobs(600, 120, 5, 3, 1.0, 8)?;
    let ctx = RunContext { seed: 3, ..RunContext::default() };
    let folds = ctx.folds_for(&ds)?;

    let factors = default_levels("L9")?.remove("tree").expect("built-in tree levels");
    for f in &factors {
        let values: Vec<String> = f.levels.iter().map(|v| v.to_string()).collect();
        println!("{:<18} {}", f.name, values.join(" / "));
    }
    let mapper = hyperparameter_mapper(ModelSpec::from_name("tree")?, ScalerSequence::identity(), factors.clone())?;

    let oa = named_oa("L9", factors.len())?;
    println!(
        "\nL9: {} rows x {} factors, balanced {}, pairwise orthogonal {}",
        oa.n_rows(),
        oa.n_factors(),
        oa.is_balanced(),
        oa.is_pairwise_orthogonal()
    );
    let results = run_experiment(&ds, &oa, &mapper, &AucTrainer::default(), &folds, ctx.seed)?;
    for r in &results {
        println!(
            "  {:?}  mean AUC {:.4}  S/N {:.3}",
            r.levels,
            r.mean.unwrap_or(f64::NAN),
            r.sn_ratio.unwrap_or(f64::NAN)
        );
    }
    let sel = main_effects_select(&oa, &results)?;
    println!("best observed: {}", describe_settings(&factors, &results[sel.best_observed_row].levels));
    println!("predicted best: {}", describe_settings(&factors, &sel.predicted_best_levels));

    let full = OrthogonalArray::full_factorial(3, factors.len())?;
    let all = run_experiment(&ds, &full, &mapper, &AucTrainer::default(), &folds, ctx.seed)?;
    let best = all
        .iter()
        .filter_map(|r| r.mean.map(|m| (m, r)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one successful row");
    println!(
        "\nfull factorial ({} runs) best: {} with mean AUC {:.4}",
        full.n_rows(),
        describe_settings(&factors, &best.1.levels),
        best.0
    );
    println!(
        "L9 best observed is {:.4} below it, using {:.0}% of the runs",
        best.0 - sel.best_observed_mean,
        100.0 * oa.n_rows() as f64 / full.n_rows() as f64
    );
    Ok(())
}

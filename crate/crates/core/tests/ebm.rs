use glassbox::dataset::{stratified_kfold, Dataset};
use glassbox::ebm::{detect_interactions, train_ebm, train_ebm_with_trace, EarlyStopping, EbmConfig, EbmModel};
use glassbox::error::Error;
use glassbox::metrics::roc_auc;
use glassbox::synth;
use ndarray::Array2;

fn small_config() -> EbmConfig {
    EbmConfig {
        max_bins: 32,
        max_rounds: 60,
        learning_rate: 0.1,
        outer_bags: 2,
        interactions: 2,
        ..EbmConfig::default()
    }
}

fn holdout_auc(model: &EbmModel, valid: &Dataset) -> f64 {
    let p = model.predict_proba_matrix(valid.x()).unwrap();
    roc_auc(valid.y(), &p).unwrap()
}

fn xor_split(interactions: usize) -> f64 {
    let ds = synth::xor(4000, 0, 11).unwrap();
    let folds = stratified_kfold(&ds, 5, 1).unwrap();
    let (tr, va) = folds.split(0);
    let cfg = EbmConfig {
        interactions,
        max_bins: 64,
        max_rounds: 200,
        learning_rate: 0.1,
        outer_bags: 4,
        ..EbmConfig::default()
    };
    let model = train_ebm(&ds.subset_rows(&tr), &cfg).unwrap();
    holdout_auc(&model, &ds.subset_rows(&va))
}

#[test]
fn xor_needs_the_pair_term() {
    let with_pair = xor_split(1);
    let without = xor_split(0);
    assert!(with_pair >= 0.99, "with interaction: {with_pair}");
    assert!(without <= 0.6, "without interaction: {without}");
}

#[test]
fn xor_pair_ranked_first() {
    let ds = synth::xor(2000, 3, 5).unwrap();
    let cfg = EbmConfig { interactions: 0, ..small_config() };
    let model = train_ebm(&ds, &cfg).unwrap();
    let pairs = detect_interactions(&ds, &model, 3, 16).unwrap();
    assert_eq!(pairs[0], (0, 1));
    assert!(detect_interactions(&ds, &model, 0, 16).unwrap().is_empty());
    // more than p(p-1)/2 is clamped
    assert_eq!(detect_interactions(&ds, &model, 100, 16).unwrap().len(), 10);
}

#[test]
fn additivity_is_exact() {
    let ds = synth::additive(800, 2, 3).unwrap();
    let model = train_ebm(&ds, &small_config()).unwrap();
    assert_eq!(model.pairs.len(), 2);
    for i in 0..ds.n_rows() {
        let row = ds.row(i);
        let exp = model.explain_local(&row).unwrap();
        let mut total = exp.intercept;
        for c in &exp.contributions {
            total += c.contribution;
        }
        assert_eq!(total, model.predict_logit(&row).unwrap());
        assert_eq!(exp.logit, total);
    }
}

#[test]
fn terms_are_centered_on_training_data() {
    let ds = synth::additive(800, 2, 4).unwrap();
    let model = train_ebm(&ds, &small_config()).unwrap();
    let n = ds.n_rows() as f64;
    for t in 0..model.n_terms() {
        let mean: f64 = (0..ds.n_rows())
            .map(|i| model.term_contributions(&ds.row(i)).unwrap()[t])
            .sum::<f64>()
            / n;
        assert!(mean.abs() < 1e-9, "term {t} mean {mean}");
    }
}

#[test]
fn training_loss_never_increases() {
    let ds = synth::imbalanced_blobs(900, 60, 5, 3, 1.5, 2).unwrap();
    let cfg = EbmConfig { class_weight: (1.0, 5.0), ..small_config() };
    let (_, trace) = train_ebm_with_trace(&ds, &cfg).unwrap();
    for losses in trace.univariate.iter().chain(&trace.pairs) {
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }
    assert_eq!(trace.univariate.len(), cfg.outer_bags);
    assert_eq!(trace.univariate[0].len(), cfg.max_rounds + 1);
}

#[test]
fn deterministic_for_fixed_seed() {
    let ds = synth::additive(500, 1, 9).unwrap();
    let a = train_ebm(&ds, &small_config()).unwrap();
    let b = train_ebm(&ds, &small_config()).unwrap();
    assert_eq!(a, b);
    let c = train_ebm(&ds, &EbmConfig { seed: 1, ..small_config() }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn feature_order_does_not_matter() {
    let ds = synth::additive(600, 1, 12).unwrap();
    let p = ds.n_features();
    let perm: Vec<usize> = (0..p).rev().collect();
    let permuted = ds.select_features(&perm).unwrap();
    let cfg = EbmConfig { interactions: 0, ..small_config() };
    let a = train_ebm(&ds, &cfg).unwrap();
    let b = train_ebm(&permuted, &cfg).unwrap();
    for i in 0..ds.n_rows() {
        let pa = a.predict_logit(&ds.row(i)).unwrap();
        let pb = b.predict_logit(&permuted.row(i)).unwrap();
        assert!((pa - pb).abs() < 1e-9, "row {i}: {pa} vs {pb}");
    }
}

#[test]
fn single_class_is_rejected() {
    let ds = Dataset::from_parts(Array2::zeros((5, 2)), vec![0; 5]).unwrap();
    assert!(matches!(train_ebm(&ds, &small_config()), Err(Error::SingleClass(_))));
}

#[test]
fn global_explanation_puts_xor_pair_first() {
    let ds = synth::xor(2000, 1, 21).unwrap();
    let cfg = EbmConfig { interactions: 1, max_rounds: 150, ..small_config() };
    let model = train_ebm(&ds, &cfg).unwrap();
    let global = model.explain_global();
    assert_eq!(global.terms[0].term, "x0 & x1");
    assert_eq!(model.top_k_features(2).unwrap().len(), 2);
    assert!(model.top_k_features(0).is_err());
    assert!(model.top_k_features(4).is_err());
}

#[test]
fn monotone_signal_ranks_informative_features_first() {
    let ds = synth::monotone_informative(3000, 2, 4, 1.5, 0.0, 8).unwrap();
    let model = train_ebm(&ds, &EbmConfig { interactions: 0, ..small_config() }).unwrap();
    let mut top = model.top_k_features(2).unwrap();
    top.sort();
    assert_eq!(top, vec![0, 1]);
}

#[test]
fn early_stopping_halts_on_noise_and_is_off_by_default() {
    assert!(EbmConfig::default().early_stopping.is_none());
    // Pure noise: held-out loss stops improving quickly.
    let ds = synth::imbalanced_blobs(600, 600, 4, 0, 0.0, 9).unwrap();
    let cfg = EbmConfig {
        max_rounds: 300,
        learning_rate: 0.2,
        interactions: 1,
        early_stopping: Some(EarlyStopping {
            validation_fraction: 0.2,
            patience: 5,
        }),
        ..small_config()
    };
    let (model, trace) = train_ebm_with_trace(&ds, &cfg).unwrap();
    for losses in trace.univariate.iter().chain(&trace.pairs) {
        assert!(losses.len() < cfg.max_rounds + 1, "ran {} rounds", losses.len() - 1);
    }
    let again = train_ebm(&ds, &cfg).unwrap();
    assert_eq!(model, again);

    let bad = EbmConfig {
        early_stopping: Some(EarlyStopping {
            validation_fraction: 1.0,
            patience: 5,
        }),
        ..small_config()
    };
    assert!(matches!(train_ebm(&ds, &bad), Err(Error::Validation(_))));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use glassbox::dataset::{save_csv, Dataset};
use glassbox::doe::default_levels;
use glassbox::eda::CorrMethod;
use glassbox::ebm::EbmConfig;
use glassbox::metrics::Metric;
use glassbox::model::ModelSpec;
use glassbox::pipeline::{execute, Command, ExplainMode, Preprocessing, RunManifest, MANIFEST_FILE};
use glassbox::scaling::ScalerParams;
use glassbox::synth;
use serde_json::{json, Value};
use tempfile::TempDir;

fn write_data(dir: &Path, name: &str, ds: &Dataset) -> PathBuf {
    let path = dir.join(name);
    save_csv(ds, &path, "Class").unwrap();
    path
}

fn small_ebm(interactions: usize) -> ModelSpec {
    ModelSpec::Ebm(EbmConfig {
        max_bins: 32,
        max_rounds: 40,
        outer_bags: 2,
        interactions,
        learning_rate: 0.1,
        ..EbmConfig::default()
    })
}

fn run(command: Command, input: Option<&Path>, seed: u64, out: &Path) -> RunManifest {
    let manifest = RunManifest::new(command, input.map(Path::to_path_buf), seed);
    execute(manifest, out).unwrap().manifest
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

#[test]
fn eda_writes_one_matrix_per_method_plus_vif() {
    let tmp = TempDir::new().unwrap();
    let ds = synth::monotone_informative(300, 2, 3, 2.0, -1.0, 4).unwrap();
    let input = write_data(tmp.path(), "data.csv", &ds);
    let out = tmp.path().join("eda");
    let methods = vec![CorrMethod::Pearson, CorrMethod::Spearman, CorrMethod::Kendall, CorrMethod::Chatterjee];
    let m = run(
        Command::Eda {
            methods,
            label_in_correlations: true,
            vif_bootstrap: 20,
            vif_include_label: false,
        },
        Some(&input),
        1,
        &out,
    );
    let mut expected = m.outputs.clone();
    expected.push(MANIFEST_FILE.into());
    assert_eq!(listing(&out), sorted(expected));
    assert_eq!(m.outputs.len(), 10);

    // Five features plus the label in every matrix.
    let xi = read_json(out.join("corr_chatterjee.json"));
    assert_eq!(xi["symmetric"], json!(false));
    let pearson = read_json(out.join("corr_pearson.json"));
    assert_eq!(pearson["symmetric"], json!(true));
    let csv = fs::read_to_string(out.join("corr_pearson.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);

    // VIF leaves the label out by default.
    let vif = fs::read_to_string(out.join("vif.csv")).unwrap();
    assert_eq!(vif.lines().count(), 1 + 5);
    assert!(!vif.contains("Class"));
}

#[test]
fn tune_scalers_runs_all_25_rows() {
    let tmp = TempDir::new().unwrap();
    let ds = synth::imbalanced_blobs(240, 60, 3, 2, 1.5, 2).unwrap();
    let input = write_data(tmp.path(), "data.csv", &ds);
    let out = tmp.path().join("scalers");
    run(
        Command::TuneScalers {
            oa: "L25".into(),
            model: ModelSpec::from_name("logreg").unwrap(),
            scaler_params: ScalerParams::default(),
            features: None,
            scaler_columns: None,
        },
        Some(&input),
        3,
        &out,
    );
    let report = read_json(out.join("scaler_experiments.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 25);
    assert_eq!(report["configurations_trained"], json!(25));
    let csv = fs::read_to_string(out.join("scaler_experiments.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 25);
    let adopted = read_json(out.join("scalers.json"));
    assert_eq!(adopted, report["adopted"]);
}

#[test]
fn tune_hparams_trains_one_configuration_per_row() {
    let tmp = TempDir::new().unwrap();
    let ds = synth::imbalanced_blobs(200, 40, 3, 2, 1.5, 5).unwrap();
    let input = write_data(tmp.path(), "data.csv", &ds);
    for (oa, model, rows) in [("L9", "tree", 9), ("L27", "gbt", 27)] {
        let out = tmp.path().join(oa);
        let factors = default_levels(oa).unwrap()[model].clone();
        run(
            Command::TuneHparams {
                oa: oa.into(),
                model: ModelSpec::from_name(model).unwrap(),
                factors,
                preprocessing: Preprocessing::default(),
            },
            Some(&input),
            9,
            &out,
        );
        let report = read_json(out.join("hparam_experiments.json"));
        assert_eq!(report["configurations_trained"], json!(rows));
        assert_eq!(report["rows"].as_array().unwrap().len(), rows);
        let best: ModelSpec = serde_json::from_value(read_json(out.join("best_model.json"))).unwrap();
        assert_eq!(best.name(), model);
    }
}

#[test]
fn train_then_explain_globally_and_locally() {
    let tmp = TempDir::new().unwrap();
    let ds = synth::xor(1200, 1, 8).unwrap();
    let input = write_data(tmp.path(), "xor.csv", &ds);
    let train_out = tmp.path().join("train");
    run(
        Command::Train {
            model: small_ebm(1),
            preprocessing: Preprocessing::default(),
        },
        Some(&input),
        4,
        &train_out,
    );
    let model_file = train_out.join("model.json");
    let report = read_json(train_out.join("train_report.json"));
    let auc = report["aggregate"]["roc_auc"].as_f64().unwrap();
    assert!(auc > 0.9, "cv auc {auc}");

    let global_out = tmp.path().join("global");
    let m = run(
        Command::Explain {
            model_file: model_file.clone(),
            model_digest: None,
            mode: ExplainMode::Global,
            row: None,
        },
        None,
        0,
        &global_out,
    );
    assert!(m.command_model_digest_is_set());
    let global = read_json(global_out.join("explain_global.json"));
    let top = &global["explanation"]["terms"][0];
    assert_eq!(top["kind"], json!("pair"));
    assert_eq!(top["features"], json!([0, 1]));

    let local_out = tmp.path().join("local");
    run(
        Command::Explain {
            model_file: model_file.clone(),
            model_digest: None,
            mode: ExplainMode::Local,
            row: Some(7),
        },
        Some(&input),
        0,
        &local_out,
    );
    let local = read_json(local_out.join("explain_local_row7.json"));
    let contributions = local["contributions"].as_array().unwrap();
    let sum: f64 = contributions.iter().map(|c| c["contribution"].as_f64().unwrap()).sum();
    let logit = local["logit"].as_f64().unwrap();
    assert!((local["intercept"].as_f64().unwrap() + sum - logit).abs() < 1e-9);
    // Sorted by magnitude, and a positive logit means class 1 is favoured.
    let mags: Vec<f64> = contributions.iter().map(|c| c["contribution"].as_f64().unwrap().abs()).collect();
    assert!(mags.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(logit > 0.0, local["proba"].as_f64().unwrap() > 0.5);

    // A row past the end of the input is a validation error.
    let bad = RunManifest::new(
        Command::Explain {
            model_file,
            model_digest: None,
            mode: ExplainMode::Local,
            row: Some(ds.n_rows()),
        },
        Some(input),
        0,
    );
    let err = execute(bad, tmp.path().join("bad")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

trait ManifestExt {
    fn command_model_digest_is_set(&self) -> bool;
}

impl ManifestExt for RunManifest {
    fn command_model_digest_is_set(&self) -> bool {
        matches!(&self.command, Command::Explain { model_digest: Some(d), .. } if d.starts_with("fnv1a64:"))
    }
}

#[test]
fn feature_sweep_finds_the_informative_prefix() {
    let tmp = TempDir::new().unwrap();
    let ds = synth::monotone_informative(800, 3, 5, 2.5, -0.5, 12).unwrap();
    let input = write_data(tmp.path(), "data.csv", &ds);
    let out = tmp.path().join("sweep");
    run(
        Command::FeatureSweep {
            model: small_ebm(0),
            k_min: 1,
            k_max: None,
            split_pairs: false,
            preprocessing: Preprocessing::default(),
        },
        Some(&input),
        2,
        &out,
    );
    let report = read_json(out.join("feature_sweep.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 8);
    let k = report["chosen_k"].as_u64().unwrap();
    assert!((3..=5).contains(&k), "chosen k = {k}");
    let selected = read_json(out.join("selected_features.json"));
    assert_eq!(selected.as_array().unwrap().len() as u64, k);

    let too_many = RunManifest::new(
        Command::FeatureSweep {
            model: small_ebm(0),
            k_min: 1,
            k_max: Some(9),
            split_pairs: false,
            preprocessing: Preprocessing::default(),
        },
        Some(input),
        2,
    );
    assert_eq!(execute(too_many, tmp.path().join("bad")).unwrap_err().exit_code(), 2);
}

#[test]
fn compare_shares_folds_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let ds = synth::imbalanced_blobs(300, 60, 4, 2, 1.5, 6).unwrap();
    let input = write_data(tmp.path(), "data.csv", &ds);
    let models: Vec<ModelSpec> = ["ebm", "logreg", "tree", "forest", "gbt"]
        .iter()
        .map(|n| match *n {
            "ebm" => small_ebm(2),
            n => ModelSpec::from_name(n).unwrap(),
        })
        .collect();
    let command = Command::Compare {
        models,
        preprocessing: Preprocessing::default(),
    };
    let first = tmp.path().join("a");
    let second = tmp.path().join("b");
    run(command.clone(), Some(&input), 5, &first);
    run(command, Some(&input), 5, &second);

    let report = read_json(first.join("comparison.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert_eq!(r["fold_assignment"], rows[0]["fold_assignment"]);
        assert!(r["error"].is_null());
    }
    for name in listing(&first) {
        assert_eq!(fs::read(first.join(&name)).unwrap(), fs::read(second.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn overfit_check_passes_on_signal_and_fails_on_memorised_noise() {
    let tmp = TempDir::new().unwrap();
    let blobs = synth::imbalanced_blobs(300, 100, 3, 3, 2.0, 1).unwrap();
    let noise = synth::imbalanced_blobs(200, 200, 3, 0, 0.0, 2).unwrap();
    let mut deep_tree = ModelSpec::from_name("tree").unwrap();
    for (k, v) in [("max_depth", 40), ("min_samples_split", 2), ("min_samples_leaf", 1)] {
        deep_tree.set_param(k, &json!(v)).unwrap();
    }
    for (ds, model, pass) in [
        (&blobs, ModelSpec::from_name("logreg").unwrap(), true),
        (&noise, deep_tree, false),
    ] {
        let input = write_data(tmp.path(), "data.csv", ds);
        let out = tmp.path().join(format!("overfit_{pass}"));
        run(
            Command::CheckOverfit {
                model,
                metric: Metric::RocAuc,
                overfit_threshold: 0.1,
                preprocessing: Preprocessing::default(),
            },
            Some(&input),
            3,
            &out,
        );
        let report = read_json(out.join("overfit.json"));
        assert_eq!(report["folds"].as_array().unwrap().len(), 5);
        assert_eq!(report["report"]["pass"], json!(pass), "{}", report["report"]);
    }
}

#[test]
fn manifest_replay_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let ds = synth::additive(400, 2, 3).unwrap();
    let input = write_data(tmp.path(), "data.csv", &ds);
    let first = tmp.path().join("first");
    run(
        Command::Train {
            model: small_ebm(1),
            preprocessing: Preprocessing::default(),
        },
        Some(&input),
        11,
        &first,
    );
    let replay = RunManifest::load(first.join(MANIFEST_FILE)).unwrap();
    let second = tmp.path().join("second");
    execute(replay, &second).unwrap();
    assert_eq!(listing(&first), listing(&second));
    for name in listing(&first) {
        assert_eq!(fs::read(first.join(&name)).unwrap(), fs::read(second.join(&name)).unwrap(), "{name}");
    }

    // A changed input no longer matches the recorded digest.
    let other = synth::additive(400, 2, 4).unwrap();
    save_csv(&other, &input, "Class").unwrap();
    let replay = RunManifest::load(first.join(MANIFEST_FILE)).unwrap();
    assert_eq!(execute(replay, tmp.path().join("third")).unwrap_err().exit_code(), 2);
}

fn cli(args: &[&str]) -> i32 {
    Process::new(env!("CARGO_BIN_EXE_glassbox"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let ds = synth::imbalanced_blobs(100, 30, 3, 2, 1.5, 7).unwrap();
    let input = write_data(tmp.path(), "data.csv", &ds);
    let input = input.to_str().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    assert_eq!(cli(&["train", "--input", input, "--model", "logreg", "--out-dir", out]), 0);
    assert!(Path::new(out).join("model.json").exists());
    // Validation: too few folds, unknown model, unknown label column.
    assert_eq!(cli(&["train", "--input", input, "--folds", "1", "--out-dir", out]), 2);
    assert_eq!(cli(&["train", "--input", input, "--model", "svm", "--out-dir", out]), 2);
    assert_eq!(cli(&["train", "--input", input, "--label-column", "Target", "--out-dir", out]), 2);
    // I/O: missing input file.
    let missing = tmp.path().join("missing.csv");
    assert_eq!(cli(&["eda", "--input", missing.to_str().unwrap(), "--out-dir", out]), 4);

    // Training: standardising a column near f64::MAX overflows, so every
    // model in the comparison fails.
    let mut text = String::from("a,b,Class\n");
    for i in 0..60 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        text += &format!("{},{},{}\n", sign * 1.7e308, i % 7, u8::from(i % 3 == 0));
    }
    let huge = tmp.path().join("huge.csv");
    fs::write(&huge, text).unwrap();
    let scalers = tmp.path().join("scalers.json");
    fs::write(&scalers, r#"{"slots":[{"kind":"standard","with_mean":true,"with_std":true}]}"#).unwrap();
    let args = [
        "compare",
        "--input",
        huge.to_str().unwrap(),
        "--models",
        "logreg,gbt",
        "--scalers",
        scalers.to_str().unwrap(),
        "--out-dir",
        out,
    ];
    assert_eq!(cli(&args), 3);
}

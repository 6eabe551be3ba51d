use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::Value;

use glassbox::doe::{default_levels, parse_levels};
use glassbox::eda::{CorrMethod, DEFAULT_BOOTSTRAP};
use glassbox::error::{Error, Result};
use glassbox::metrics::{Metric, DEFAULT_OVERFIT_THRESHOLD};
use glassbox::model::{ModelSpec, MODEL_NAMES};
use glassbox::pipeline::{execute, Command, ExplainMode, Preprocessing, RunManifest};
use glassbox::scaling::{ScalerParams, ScalerSequence};

/// Glass-box fraud modelling: EDA, Taguchi tuning, EBM and baseline training,
/// comparison and explanations. Every run writes a manifest that replays it.
#[derive(Parser)]
#[command(name = "glassbox", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    /// Labelled CSV input.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "Class")]
    label_column: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Stratified cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Probability at or above which a row is predicted positive.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value = "glassbox-out")]
    out_dir: PathBuf,
    /// Replays this manifest when the file exists (other flags except
    /// --out-dir are then ignored); otherwise saves this run's manifest there.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// One of ebm, logreg, tree, forest, gbt (default ebm).
    #[arg(long)]
    model: Option<String>,
    /// JSON model specification, e.g. best_model.json from tune-hparams.
    #[arg(long)]
    model_config: Option<PathBuf>,
    /// Hyperparameter override NAME=VALUE (VALUE parsed as JSON, else a string).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct FeatureArgs {
    /// Comma-separated feature names to use.
    #[arg(long, conflicts_with = "features_file")]
    features: Option<String>,
    /// JSON array of feature names, e.g. selected_features.json from feature-sweep.
    #[arg(long)]
    features_file: Option<PathBuf>,
    /// Comma-separated features the scalers transform (default: all used features).
    #[arg(long)]
    scaler_columns: Option<String>,
}

#[derive(Args)]
struct PrepArgs {
    #[command(flatten)]
    features: FeatureArgs,
    /// JSON scaler sequence, e.g. scalers.json from tune-scalers.
    #[arg(long)]
    scalers: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verb {
    /// Correlation matrices (Pearson, Spearman, Kendall, Chatterjee) and a VIF table.
    Eda {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "pearson,spearman,kendall,chatterjee")]
        methods: String,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
        vif_bootstrap: usize,
        /// Include the label as a regressor in the VIF table.
        #[arg(long)]
        vif_include_label: bool,
        /// Leave the label out of the correlation matrices.
        #[arg(long)]
        no_label_in_correlations: bool,
    },
    /// Search scaler orders with an L25 orthogonal array.
    TuneScalers {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long, default_value = "L25")]
        oa: String,
        /// JSON scaler parameters used for every array row.
        #[arg(long)]
        scaler_params: Option<PathBuf>,
    },
    /// Search hyperparameters with an L9 or L27 orthogonal array.
    TuneHparams {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        prep: PrepArgs,
        #[arg(long, default_value = "L9")]
        oa: String,
        /// JSON level table keyed by model name (default: built-in levels).
        #[arg(long)]
        levels: Option<PathBuf>,
    },
    /// Cross-validate one configuration and save the model fitted on all rows.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Rank features with an EBM and cross-validate the top k for each k.
    FeatureSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        prep: PrepArgs,
        #[arg(long, default_value_t = 3)]
        k_min: usize,
        /// Defaults to min(30, number of features).
        #[arg(long)]
        k_max: Option<usize>,
        /// Credit half of each pair term's importance to each of its features.
        #[arg(long)]
        split_pairs: bool,
    },
    /// Cross-validate several models on identical features and folds.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ebm,logreg,tree,forest,gbt")]
        models: String,
        /// JSON model specification replacing the defaults of its model kind (repeatable).
        #[arg(long)]
        model_config: Vec<PathBuf>,
        #[command(flatten)]
        prep: PrepArgs,
    },
    /// Compare mean training and held-out scores across folds.
    CheckOverfit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        prep: PrepArgs,
        #[arg(long, default_value = "roc_auc")]
        metric: String,
        #[arg(long, default_value_t = DEFAULT_OVERFIT_THRESHOLD)]
        overfit_threshold: f64,
    },
    /// Global term importances or per-row contributions of a saved EBM.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long, value_parser = ["global", "local"], default_value = "global")]
        mode: String,
        /// Input row (0-based) for local explanations.
        #[arg(long)]
        row: Option<usize>,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

fn model_spec(args: &ModelArgs) -> Result<ModelSpec> {
    let mut spec = match &args.model_config {
        Some(path) => {
            let spec: ModelSpec = read_json(path)?;
            if let Some(name) = &args.model {
                if name != spec.name() {
                    return Err(Error::Validation(format!(
                        "--model {name} conflicts with the '{}' configuration in {}",
                        spec.name(),
                        path.display()
                    )));
                }
            }
            spec
        }
        None => ModelSpec::from_name(args.model.as_deref().unwrap_or("ebm"))?,
    };
    for p in &args.params {
        let (name, raw) = p
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--param expects NAME=VALUE, got '{p}'")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        spec.set_param(name.trim(), &value)?;
    }
    Ok(spec)
}

fn feature_list(args: &FeatureArgs) -> Result<Option<Vec<String>>> {
    match (&args.features, &args.features_file) {
        (Some(list), _) => Ok(Some(split_list(list))),
        (None, Some(path)) => Ok(Some(read_json(path)?)),
        (None, None) => Ok(None),
    }
}

fn preprocessing(args: &PrepArgs) -> Result<Preprocessing> {
    Ok(Preprocessing {
        features: feature_list(&args.features)?,
        scalers: match &args.scalers {
            Some(path) => read_json(path)?,
            None => ScalerSequence::identity(),
        },
        scaler_columns: args.features.scaler_columns.as_deref().map(split_list),
    })
}

fn build_command(verb: &Verb) -> Result<Command> {
    Ok(match verb {
        Verb::Eda {
            methods,
            vif_bootstrap,
            vif_include_label,
            no_label_in_correlations,
            ..
        } => Command::Eda {
            methods: split_list(methods)
                .iter()
                .map(|m| CorrMethod::parse(m))
                .collect::<Result<_>>()?,
            label_in_correlations: !no_label_in_correlations,
            vif_bootstrap: *vif_bootstrap,
            vif_include_label: *vif_include_label,
        },
        Verb::TuneScalers {
            model,
            features,
            oa,
            scaler_params,
            ..
        } => Command::TuneScalers {
            oa: oa.clone(),
            model: model_spec(model)?,
            scaler_params: match scaler_params {
                Some(path) => read_json(path)?,
                None => ScalerParams::default(),
            },
            features: feature_list(features)?,
            scaler_columns: features.scaler_columns.as_deref().map(split_list),
        },
        Verb::TuneHparams {
            model, prep, oa, levels, ..
        } => {
            let spec = model_spec(model)?;
            let table = match levels {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    parse_levels(&text)?
                }
                None => default_levels(oa)?,
            };
            let factors = table.get(spec.name()).cloned().ok_or_else(|| {
                Error::Validation(format!("no hyperparameter levels for model '{}'", spec.name()))
            })?;
            Command::TuneHparams {
                oa: oa.clone(),
                model: spec,
                factors,
                preprocessing: preprocessing(prep)?,
            }
        }
        Verb::Train { model, prep, .. } => Command::Train {
            model: model_spec(model)?,
            preprocessing: preprocessing(prep)?,
        },
        Verb::FeatureSweep {
            model,
            prep,
            k_min,
            k_max,
            split_pairs,
            ..
        } => Command::FeatureSweep {
            model: model_spec(model)?,
            k_min: *k_min,
            k_max: *k_max,
            split_pairs: *split_pairs,
            preprocessing: preprocessing(prep)?,
        },
        Verb::Compare {
            models,
            model_config,
            prep,
            ..
        } => {
            let overrides: Vec<ModelSpec> = model_config.iter().map(|p| read_json(p)).collect::<Result<_>>()?;
            let models = split_list(models)
                .iter()
                .map(|name| {
                    if !MODEL_NAMES.contains(&name.as_str()) {
                        return ModelSpec::from_name(name);
                    }
                    Ok(overrides
                        .iter()
                        .find(|s| s.name() == name)
                        .cloned()
                        .unwrap_or(ModelSpec::from_name(name)?))
                })
                .collect::<Result<_>>()?;
            Command::Compare {
                models,
                preprocessing: preprocessing(prep)?,
            }
        }
        Verb::CheckOverfit {
            model,
            prep,
            metric,
            overfit_threshold,
            ..
        } => Command::CheckOverfit {
            model: model_spec(model)?,
            metric: Metric::parse(metric)?,
            overfit_threshold: *overfit_threshold,
            preprocessing: preprocessing(prep)?,
        },
        Verb::Explain {
            model_file, mode, row, ..
        } => Command::Explain {
            model_file: model_file.clone(),
            model_digest: None,
            mode: if mode == "local" {
                ExplainMode::Local
            } else {
                ExplainMode::Global
            },
            row: *row,
        },
    })
}

fn common(verb: &Verb) -> &Common {
    match verb {
        Verb::Eda { common, .. }
        | Verb::TuneScalers { common, .. }
        | Verb::TuneHparams { common, .. }
        | Verb::Train { common, .. }
        | Verb::FeatureSweep { common, .. }
        | Verb::Compare { common, .. }
        | Verb::CheckOverfit { common, .. }
        | Verb::Explain { common, .. } => common,
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = common(&cli.verb);
    let replay = common.manifest.as_deref().filter(|p| p.exists());
    let manifest = match replay {
        Some(path) => {
            log::info!("replaying {}", path.display());
            RunManifest::load(path)?
        }
        None => {
            let mut m = RunManifest::new(build_command(&cli.verb)?, common.input.clone(), common.seed);
            m.label_column = common.label_column.clone();
            m.cv.folds = common.folds;
            m.threshold = common.threshold;
            m
        }
    };
    let outcome = execute(manifest, &common.out_dir)?;
    if let (Some(path), None) = (&common.manifest, replay) {
        outcome.manifest.save(path)?;
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

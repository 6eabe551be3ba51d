use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::doe::FactorLevels;
use crate::eda::CorrMethod;
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::model::ModelSpec;
use crate::scaling::{ScalerParams, ScalerSequence};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a command and get byte-identical outputs.
///
/// The output directory is deliberately not part of the manifest: the same
/// manifest executed into two directories produces the same files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Command,
    /// Labelled CSV the command reads; `None` only for commands that need no data.
    pub input: Option<PathBuf>,
    /// Digest of the input bytes, filled in on the first run and checked on reruns.
    pub input_digest: Option<String>,
    pub label_column: String,
    pub seed: u64,
    pub cv: CvConfig,
    pub threshold: f64,
    /// Files the command writes, relative to the output directory.
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub scheme: String,
    pub folds: usize,
}

/// Column selection and scaling shared by the training commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    /// Source features to use, by name, in this order; every feature when `None`.
    pub features: Option<Vec<String>>,
    pub scalers: ScalerSequence,
    /// Selected features the scalers transform; all of them when `None`.
    pub scaler_columns: Option<Vec<String>>,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing {
            features: None,
            scalers: ScalerSequence::identity(),
            scaler_columns: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMode {
    Global,
    Local,
}

/// One CLI verb with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Eda {
        methods: Vec<CorrMethod>,
        /// Add the label as a column of every correlation matrix.
        label_in_correlations: bool,
        vif_bootstrap: usize,
        /// Treat the label as one more regressor in the VIF table.
        vif_include_label: bool,
    },
    TuneScalers {
        oa: String,
        model: ModelSpec,
        scaler_params: ScalerParams,
        features: Option<Vec<String>>,
        scaler_columns: Option<Vec<String>>,
    },
    TuneHparams {
        oa: String,
        model: ModelSpec,
        factors: Vec<FactorLevels>,
        preprocessing: Preprocessing,
    },
    Train {
        model: ModelSpec,
        preprocessing: Preprocessing,
    },
    FeatureSweep {
        model: ModelSpec,
        k_min: usize,
        /// Defaults to `min(30, number of features)`.
        k_max: Option<usize>,
        /// Credit half of each pair term's importance to each of its features.
        split_pairs: bool,
        preprocessing: Preprocessing,
    },
    Compare {
        models: Vec<ModelSpec>,
        preprocessing: Preprocessing,
    },
    CheckOverfit {
        model: ModelSpec,
        metric: Metric,
        overfit_threshold: f64,
        preprocessing: Preprocessing,
    },
    Explain {
        model_file: PathBuf,
        /// Digest of the model file, filled in on the first run and checked on reruns.
        model_digest: Option<String>,
        mode: ExplainMode,
        row: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eda { .. } => "eda",
            Command::TuneScalers { .. } => "tune-scalers",
            Command::TuneHparams { .. } => "tune-hparams",
            Command::Train { .. } => "train",
            Command::FeatureSweep { .. } => "feature-sweep",
            Command::Compare { .. } => "compare",
            Command::CheckOverfit { .. } => "check-overfit",
            Command::Explain { .. } => "explain",
        }
    }

    pub fn needs_input(&self) -> bool {
        !matches!(
            self,
            Command::Explain {
                mode: ExplainMode::Global,
                ..
            }
        )
    }

    /// Files written by this command, besides the manifest itself.
    pub fn output_files(&self) -> Vec<String> {
        let pair = |stem: &str| vec![format!("{stem}.json"), format!("{stem}.csv")];
        match self {
            Command::Eda { methods, .. } => {
                let mut files: Vec<String> = methods
                    .iter()
                    .flat_map(|m| pair(&format!("corr_{}", m.name())))
                    .collect();
                files.extend(pair("vif"));
                files
            }
            Command::TuneScalers { .. } => {
                let mut files = pair("scaler_experiments");
                files.push("scalers.json".into());
                files
            }
            Command::TuneHparams { .. } => {
                let mut files = pair("hparam_experiments");
                files.push("hparam_summary.csv".into());
                files.push("best_model.json".into());
                files
            }
            Command::Train { .. } => {
                let mut files = pair("train_report");
                files.push("model.json".into());
                files
            }
            Command::FeatureSweep { .. } => {
                let mut files = pair("feature_sweep");
                files.push("selected_features.json".into());
                files
            }
            Command::Compare { .. } => pair("comparison"),
            Command::CheckOverfit { .. } => pair("overfit"),
            Command::Explain { mode, row, .. } => match (mode, row) {
                (ExplainMode::Global, _) => pair("explain_global"),
                (ExplainMode::Local, Some(r)) => pair(&format!("explain_local_row{r}")),
                (ExplainMode::Local, None) => Vec::new(),
            },
        }
    }
}

impl RunManifest {
    pub fn new(command: Command, input: Option<PathBuf>, seed: u64) -> Self {
        RunManifest {
            tool_version: format!("glassbox {}", env!("CARGO_PKG_VERSION")),
            outputs: command.output_files(),
            command,
            input,
            input_digest: None,
            label_column: crate::dataset::DEFAULT_LABEL_COLUMN.into(),
            seed,
            cv: CvConfig {
                scheme: "stratified_kfold".into(),
                folds: 5,
            },
            threshold: crate::metrics::DEFAULT_THRESHOLD,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// 64-bit FNV-1a digest, used to tie reports to their manifest and to detect
/// changed inputs. Not a security measure.
pub fn digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("fnv1a64:{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(digest(b""), "fnv1a64:cbf29ce484222325");
        assert_eq!(digest(b"a"), "fnv1a64:af63dc4c8601ec8c");
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest::new(
            Command::Train {
                model: ModelSpec::from_name("gbt").unwrap(),
                preprocessing: Preprocessing::default(),
            },
            Some("data.csv".into()),
            7,
        );
        let back = RunManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.outputs, vec!["train_report.json", "train_report.csv", "model.json"]);
    }
}

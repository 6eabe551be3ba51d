//! Model specifications, trained models behind one [`Classifier`] interface, and
//! the versioned JSON file format.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baselines::{
    train_forest, train_gbt, train_logreg, train_tree, ForestConfig, ForestModel, GbtConfig, GbtModel, LinearModel,
    LogRegConfig, MaxFeatures, TreeConfig, TreeModel,
};
use crate::dataset::Dataset;
use crate::ebm::{train_ebm, EbmConfig, EbmModel};
use crate::error::{Error, Result};
use crate::scaling::FittedSequence;

/// Version written to and required from model files.
pub const FORMAT_VERSION: u32 = 1;

pub trait Classifier {
    /// Probability of class 1 for every row of `x`.
    fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>>;
}

/// Which learner to train and with what hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Ebm(EbmConfig),
    Logreg(LogRegConfig),
    Tree(TreeConfig),
    Forest(ForestConfig),
    Gbt(GbtConfig),
}

/// Names accepted by [`ModelSpec::from_name`], in report order.
pub const MODEL_NAMES: [&str; 5] = ["ebm", "logreg", "tree", "forest", "gbt"];

fn as_f64(name: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::validation(format!("parameter '{name}' must be a finite number, got {v}")))
}

fn as_usize(name: &str, v: &Value) -> Result<usize> {
    let x = as_f64(name, v)?;
    if x < 0.0 || x.fract() != 0.0 {
        return Err(Error::validation(format!(
            "parameter '{name}' must be a non-negative integer, got {v}"
        )));
    }
    Ok(x as usize)
}

fn positive(name: &str, v: &Value) -> Result<f64> {
    let x = as_f64(name, v)?;
    if x <= 0.0 {
        return Err(Error::validation(format!("parameter '{name}' must be > 0, got {v}")));
    }
    Ok(x)
}

impl ModelSpec {
    /// The default configuration of a named model.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "ebm" => ModelSpec::Ebm(EbmConfig::default()),
            "logreg" => ModelSpec::Logreg(LogRegConfig::default()),
            "tree" => ModelSpec::Tree(TreeConfig::default()),
            "forest" => ModelSpec::Forest(ForestConfig::default()),
            "gbt" => ModelSpec::Gbt(GbtConfig::default()),
            other => {
                return Err(Error::validation(format!(
                    "unknown model '{other}' (expected one of {})",
                    MODEL_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Ebm(_) => "ebm",
            ModelSpec::Logreg(_) => "logreg",
            ModelSpec::Tree(_) => "tree",
            ModelSpec::Forest(_) => "forest",
            ModelSpec::Gbt(_) => "gbt",
        }
    }

    /// Copy with the randomized learners' seed replaced.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelSpec::Ebm(c) => c.seed = seed,
            ModelSpec::Forest(c) => c.seed = seed,
            _ => {}
        }
        out
    }

    /// Sets one hyperparameter by name. `class_weight_pos` sets the positive
    /// class weight of any weighted learner; `C` sets logistic `l2 = 1 / C`.
    pub fn set_param(&mut self, name: &str, value: &Value) -> Result<()> {
        let unknown = |model: &str| {
            Err(Error::validation(format!(
                "unknown hyperparameter '{name}' for model '{model}'"
            )))
        };
        match self {
            ModelSpec::Ebm(c) => match name {
                "learning_rate" => c.learning_rate = positive(name, value)?,
                "max_bins" => c.max_bins = as_usize(name, value)?,
                "max_rounds" => c.max_rounds = as_usize(name, value)?,
                "interactions" => c.interactions = as_usize(name, value)?,
                "outer_bags" => c.outer_bags = as_usize(name, value)?,
                "min_samples_bin" => c.min_samples_bin = as_usize(name, value)?,
                "interaction_grid" => c.interaction_grid = as_usize(name, value)?,
                "class_weight_pos" => c.class_weight.1 = positive(name, value)?,
                _ => return unknown("ebm"),
            },
            ModelSpec::Logreg(c) => match name {
                "C" => c.l2 = 1.0 / positive(name, value)?,
                "l2" => c.l2 = as_f64(name, value)?,
                "class_weight_pos" => c.class_weight.1 = positive(name, value)?,
                "max_iter" => c.max_iter = as_usize(name, value)?,
                "tol" => c.tol = positive(name, value)?,
                _ => return unknown("logreg"),
            },
            ModelSpec::Tree(c) => match name {
                "max_depth" => c.max_depth = as_usize(name, value)?,
                "min_samples_split" => c.min_samples_split = as_usize(name, value)?,
                "min_samples_leaf" => c.min_samples_leaf = as_usize(name, value)?,
                "class_weight_pos" => c.class_weight.1 = positive(name, value)?,
                _ => return unknown("tree"),
            },
            ModelSpec::Forest(c) => match name {
                "n_estimators" => c.n_estimators = as_usize(name, value)?,
                "max_depth" => c.max_depth = as_usize(name, value)?,
                "max_features" => {
                    c.max_features = match value.as_str() {
                        Some("sqrt") => MaxFeatures::Sqrt,
                        Some("all") => MaxFeatures::All,
                        _ => MaxFeatures::Count(as_usize(name, value)?),
                    }
                }
                "min_samples_split" => c.min_samples_split = as_usize(name, value)?,
                "min_samples_leaf" => c.min_samples_leaf = as_usize(name, value)?,
                "class_weight_pos" => c.class_weight.1 = positive(name, value)?,
                _ => return unknown("forest"),
            },
            ModelSpec::Gbt(c) => match name {
                "learning_rate" => c.learning_rate = positive(name, value)?,
                "max_depth" => c.max_depth = as_usize(name, value)?,
                "n_rounds" => c.n_rounds = as_usize(name, value)?,
                "scale_pos_weight" => c.scale_pos_weight = positive(name, value)?,
                "min_samples_leaf" => c.min_samples_leaf = as_usize(name, value)?,
                _ => return unknown("gbt"),
            },
        }
        Ok(())
    }

    pub fn fit(&self, ds: &Dataset) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::Ebm(c) => TrainedModel::Ebm(train_ebm(ds, c)?),
            ModelSpec::Logreg(c) => TrainedModel::Logreg(train_logreg(ds, c)?),
            ModelSpec::Tree(c) => TrainedModel::Tree(train_tree(ds, c)?),
            ModelSpec::Forest(c) => TrainedModel::Forest(train_forest(ds, c)?),
            ModelSpec::Gbt(c) => TrainedModel::Gbt(train_gbt(ds, c)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Ebm(EbmModel),
    Logreg(LinearModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Gbt(GbtModel),
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Ebm(_) => "ebm",
            TrainedModel::Logreg(_) => "logreg",
            TrainedModel::Tree(_) => "tree",
            TrainedModel::Forest(_) => "forest",
            TrainedModel::Gbt(_) => "gbt",
        }
    }

    pub fn as_ebm(&self) -> Option<&EbmModel> {
        match self {
            TrainedModel::Ebm(m) => Some(m),
            _ => None,
        }
    }

    fn to_value(&self) -> Result<Value> {
        Ok(match self {
            TrainedModel::Ebm(m) => serde_json::to_value(m)?,
            TrainedModel::Logreg(m) => serde_json::to_value(m)?,
            TrainedModel::Tree(m) => serde_json::to_value(m)?,
            TrainedModel::Forest(m) => serde_json::to_value(m)?,
            TrainedModel::Gbt(m) => serde_json::to_value(m)?,
        })
    }

    fn from_value(kind: &str, v: Value) -> Result<Self> {
        Ok(match kind {
            "ebm" => TrainedModel::Ebm(serde_json::from_value(v)?),
            "logreg" => TrainedModel::Logreg(serde_json::from_value(v)?),
            "tree" => TrainedModel::Tree(serde_json::from_value(v)?),
            "forest" => TrainedModel::Forest(serde_json::from_value(v)?),
            "gbt" => TrainedModel::Gbt(serde_json::from_value(v)?),
            other => return Err(Error::Format(format!("unknown model kind '{other}'"))),
        })
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Ebm(m) => m.predict_proba_matrix(x),
            TrainedModel::Logreg(m) => m.predict_proba(x),
            TrainedModel::Tree(m) => m.predict(x),
            TrainedModel::Forest(m) => m.predict_proba(x),
            TrainedModel::Gbt(m) => m.predict_proba(x),
        }
    }
}

/// A trained model together with the preprocessing that feeds it: column
/// selection from the source dataset, then the fitted scaler sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    /// Feature names of the dataset the pipeline was trained from.
    pub source_features: Vec<String>,
    /// Source columns fed to the scalers and model, in order.
    pub feature_ids: Vec<usize>,
    pub scalers: Option<FittedSequence>,
    pub model: TrainedModel,
}

impl FittedPipeline {
    /// Selects and scales the model's input columns from a source-shaped matrix.
    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.source_features.len() {
            return Err(Error::DimensionMismatch {
                expected: self.source_features.len(),
                found: x.ncols(),
            });
        }
        let selected = x.select(ndarray::Axis(1), &self.feature_ids);
        match &self.scalers {
            Some(s) => s.apply(&selected),
            None => Ok(selected),
        }
    }

    pub fn model_feature_names(&self) -> Vec<String> {
        self.feature_ids.iter().map(|&j| self.source_features[j].clone()).collect()
    }
}

impl Classifier for FittedPipeline {
    fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        self.model.predict_proba(&self.transform(x)?)
    }
}

/// Serializes the pipeline in the versioned envelope
/// `{format_version, kind, model, pipeline: {source_features, feature_ids, scalers}}`.
pub fn to_json(p: &FittedPipeline) -> Result<String> {
    let envelope = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "kind": p.model.kind(),
        "model": p.model.to_value()?,
        "pipeline": {
            "source_features": p.source_features,
            "feature_ids": p.feature_ids,
            "scalers": p.scalers,
        }
    });
    Ok(serde_json::to_string_pretty(&envelope)? + "\n")
}

pub fn from_json(text: &str) -> Result<FittedPipeline> {
    let mut v: Value = serde_json::from_str(text)?;
    let version = v
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Format("missing or non-integer format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Format("missing model kind".into()))?
        .to_string();
    let model = TrainedModel::from_value(&kind, v["model"].take())?;
    let pipe = v["pipeline"].take();
    let source_features: Vec<String> = serde_json::from_value(pipe["source_features"].clone())?;
    let feature_ids: Vec<usize> = serde_json::from_value(pipe["feature_ids"].clone())?;
    let scalers: Option<FittedSequence> = serde_json::from_value(pipe["scalers"].clone())?;
    if let Some(&bad) = feature_ids.iter().find(|&&j| j >= source_features.len()) {
        return Err(Error::Format(format!("feature id {bad} out of range")));
    }
    Ok(FittedPipeline {
        source_features,
        feature_ids,
        scalers,
        model,
    })
}

pub fn save_model(path: impl AsRef<Path>, p: &FittedPipeline) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(p)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedPipeline> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

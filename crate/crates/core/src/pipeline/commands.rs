use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::manifest::Preprocessing;
use crate::dataset::{stratified_kfold, Dataset, StratifiedFolds};
use crate::doe::{
    fit_trial, hyperparameter_mapper, main_effects_select, named_oa, run_experiment, scaler_mapper, AucTrainer,
    ExperimentResult, FactorLevels, Selection, TrialConfig,
};
use crate::eda::{correlation_matrix, vif_table, CorrMethod, CorrelationMatrix, VifTable};
use crate::error::{Error, Result};
use crate::metrics::{overfit_gap, FoldId, Metric, MetricsReport, OverfitReport};
use crate::model::{FittedPipeline, ModelSpec};
use crate::scaling::{fit_sequence_on, ScalerParams, ScalerSequence};
use crate::stats::derive_seed;

const FOLD_STREAM: u64 = 0xF01D;
const CV_STREAM: u64 = 0xC5;
const FINAL_FIT_STREAM: u64 = 0xF17;
const EDA_STREAM: u64 = 0xEDA;

/// Run-wide settings every command shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunContext {
    pub seed: u64,
    pub folds: usize,
    pub threshold: f64,
}

impl Default for RunContext {
    fn default() -> Self {
        RunContext {
            seed: 0,
            folds: 5,
            threshold: crate::metrics::DEFAULT_THRESHOLD,
        }
    }
}

impl RunContext {
    /// The fold assignment used by every command of a run with this seed.
    pub fn folds_for(&self, ds: &Dataset) -> Result<StratifiedFolds> {
        stratified_kfold(ds, self.folds, derive_seed(self.seed, FOLD_STREAM, 0))
    }
}

/// Report name of a learner, as used in comparison tables.
pub fn display_name(spec: &ModelSpec) -> &'static str {
    match spec {
        ModelSpec::Ebm(_) => "EBM",
        ModelSpec::Logreg(_) => "Logistic Regression",
        ModelSpec::Tree(_) => "Decision Tree",
        ModelSpec::Forest(_) => "Random Forest",
        ModelSpec::Gbt(_) => "Gradient Boosted Trees",
    }
}

/// Indices of `names` in `available`; every name must exist exactly once.
pub fn resolve_names(available: &[String], names: &[String]) -> Result<Vec<usize>> {
    let mut ids = Vec::with_capacity(names.len());
    for name in names {
        let j = available
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::validation(format!("unknown feature '{name}'")))?;
        if ids.contains(&j) {
            return Err(Error::validation(format!("feature '{name}' listed twice")));
        }
        ids.push(j);
    }
    Ok(ids)
}

/// A dataset restricted to the requested features, plus scaler column indices
/// relative to that restriction.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub data: Dataset,
    /// Selected columns of the source dataset, in order.
    pub feature_ids: Vec<usize>,
    pub scaler_columns: Option<Vec<usize>>,
}

pub fn prepare(
    ds: &Dataset,
    features: Option<&[String]>,
    scaler_columns: Option<&[String]>,
) -> Result<PreparedData> {
    let feature_ids = match features {
        Some(names) if names.is_empty() => return Err(Error::validation("feature list is empty")),
        Some(names) => resolve_names(ds.feature_names(), names)?,
        None => (0..ds.n_features()).collect(),
    };
    let data = ds.select_features(&feature_ids)?;
    let scaler_columns = scaler_columns
        .map(|names| {
            resolve_names(data.feature_names(), names).map(|mut ids| {
                ids.sort_unstable();
                ids
            })
        })
        .transpose()?;
    Ok(PreparedData {
        data,
        feature_ids,
        scaler_columns,
    })
}

impl Preprocessing {
    pub fn prepare(&self, ds: &Dataset) -> Result<PreparedData> {
        prepare(ds, self.features.as_deref(), self.scaler_columns.as_deref())
    }
}

/// Held-out (and optionally training) metrics of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEvaluation {
    pub fold: usize,
    pub test: MetricsReport,
    pub train: Option<MetricsReport>,
}

/// Fits `cfg` on every training split (scalers fitted on that split only) and
/// scores the held-out fold. Folds run in parallel; fold `f` trains with a seed
/// derived from `seed` and `f`, so results do not depend on the worker count.
pub fn cross_validate(
    data: &Dataset,
    cfg: &TrialConfig,
    scaler_columns: Option<&[usize]>,
    folds: &StratifiedFolds,
    seed: u64,
    threshold: f64,
    with_train: bool,
) -> Result<Vec<FoldEvaluation>> {
    (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let (tr, va) = folds.split(f);
            let (train, valid) = (data.subset_rows(&tr), data.subset_rows(&va));
            let fitted = fit_trial(cfg, &train, scaler_columns, derive_seed(seed, CV_STREAM, f as u64))?;
            let test = MetricsReport::evaluate(valid.y(), &fitted.predict_proba(valid.x())?, threshold, FoldId::Fold(f))?;
            let train = if with_train {
                Some(MetricsReport::evaluate(
                    train.y(),
                    &fitted.predict_proba(train.x())?,
                    threshold,
                    FoldId::Fold(f),
                )?)
            } else {
                None
            };
            Ok(FoldEvaluation { fold: f, test, train })
        })
        .collect()
}

fn aggregate_tests(evals: &[FoldEvaluation]) -> Result<MetricsReport> {
    let tests: Vec<MetricsReport> = evals.iter().map(|e| e.test.clone()).collect();
    MetricsReport::aggregate(&tests)
}

// ---------------------------------------------------------------- eda

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaReport {
    pub n_rows: usize,
    pub correlations: Vec<CorrelationMatrix>,
    pub label_in_correlations: bool,
    pub vif: VifTable,
    pub vif_includes_label: bool,
}

pub fn cmd_eda(
    ds: &Dataset,
    label_name: &str,
    methods: &[CorrMethod],
    label_in_correlations: bool,
    vif_bootstrap: usize,
    vif_include_label: bool,
    ctx: &RunContext,
) -> Result<EdaReport> {
    if methods.is_empty() {
        return Err(Error::validation("no correlation methods requested"));
    }
    let with_label = ds.with_label_as_feature(label_name)?;
    let corr_data = if label_in_correlations { &with_label } else { ds };
    let correlations = methods
        .iter()
        .enumerate()
        .map(|(i, &m)| correlation_matrix(corr_data, m, derive_seed(ctx.seed, EDA_STREAM, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let vif_data = if vif_include_label { &with_label } else { ds };
    let vif = vif_table(vif_data, vif_bootstrap, derive_seed(ctx.seed, EDA_STREAM, 0x51F))?;
    Ok(EdaReport {
        n_rows: ds.n_rows(),
        correlations,
        label_in_correlations,
        vif,
        vif_includes_label: vif_include_label,
    })
}

// ---------------------------------------------------------------- tuning

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneScalersReport {
    pub oa: String,
    pub model: ModelSpec,
    pub features: Vec<String>,
    pub rows: Vec<ExperimentResult>,
    pub selection: Selection,
    /// Sequence of the row with the highest mean held-out ROC-AUC.
    pub adopted: ScalerSequence,
    pub adopted_row: usize,
    pub adopted_mean_roc_auc: f64,
    /// Array rows executed (one configuration each).
    pub configurations_trained: usize,
    /// Individual model fits: configurations times folds.
    pub model_fits: usize,
}

pub fn cmd_tune_scalers(
    oa_name: &str,
    model: &ModelSpec,
    params: &ScalerParams,
    prepared: &PreparedData,
    ctx: &RunContext,
) -> Result<TuneScalersReport> {
    let oa = named_oa(oa_name, crate::scaling::SEQUENCE_SLOTS)?;
    if oa.levels != 5 {
        return Err(Error::validation(format!(
            "scaler search needs a 5-level array (one level per scaler), '{oa_name}' has {} levels",
            oa.levels
        )));
    }
    let folds = ctx.folds_for(&prepared.data)?;
    let mapper = scaler_mapper(params.clone(), model.clone());
    let trainer = AucTrainer {
        scaler_columns: prepared.scaler_columns.clone(),
    };
    let rows = run_experiment(&prepared.data, &oa, &mapper, &trainer, &folds, ctx.seed)?;
    let selection = main_effects_select(&oa, &rows)?;
    let best = &rows[selection.best_observed_row];
    let adopted = best
        .config
        .as_ref()
        .map(|c| c.scalers.clone())
        .ok_or_else(|| Error::Training("best row has no configuration".into()))?;
    Ok(TuneScalersReport {
        oa: oa.name.clone(),
        model: model.clone(),
        features: prepared.data.feature_names().to_vec(),
        adopted_row: selection.best_observed_row,
        adopted_mean_roc_auc: selection.best_observed_mean,
        configurations_trained: rows.len(),
        model_fits: rows.len() * folds.k,
        adopted,
        rows,
        selection,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneHparamsReport {
    pub oa: String,
    pub model: String,
    pub factors: Vec<FactorLevels>,
    pub rows: Vec<ExperimentResult>,
    pub selection: Selection,
    /// Settings of the row with the highest mean held-out ROC-AUC.
    pub best_hyperparameters: BTreeMap<String, Value>,
    pub best_model: ModelSpec,
    pub best_mean_roc_auc: f64,
    /// Settings formed from the best main-effect level of every factor; may be
    /// a combination the array never ran.
    pub predicted_best_hyperparameters: BTreeMap<String, Value>,
    pub configurations_trained: usize,
    pub model_fits: usize,
}

/// Hyperparameter values chosen by a row of 1-based levels.
pub fn levels_to_settings(factors: &[FactorLevels], levels: &[usize]) -> BTreeMap<String, Value> {
    factors
        .iter()
        .zip(levels)
        .filter_map(|(f, &l)| f.levels.get(l.wrapping_sub(1)).map(|v| (f.name.clone(), v.clone())))
        .collect()
}

/// `name: value` pairs in factor order, as in a hyperparameter summary table.
pub fn describe_settings(factors: &[FactorLevels], levels: &[usize]) -> String {
    factors
        .iter()
        .zip(levels)
        .map(|(f, &l)| {
            let v = match f.levels.get(l.wrapping_sub(1)) {
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
                None => "?".into(),
            };
            format!("{}: {v}", f.name)
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn cmd_tune_hparams(
    oa_name: &str,
    model: &ModelSpec,
    factors: &[FactorLevels],
    prep: &Preprocessing,
    prepared: &PreparedData,
    ctx: &RunContext,
) -> Result<TuneHparamsReport> {
    if factors.is_empty() {
        return Err(Error::validation("no hyperparameter factors given"));
    }
    let oa = named_oa(oa_name, factors.len())?;
    if let Some(f) = factors.iter().find(|f| f.levels.len() != oa.levels) {
        return Err(Error::validation(format!(
            "factor '{}' has {} levels but {} needs {}",
            f.name,
            f.levels.len(),
            oa.name,
            oa.levels
        )));
    }
    let folds = ctx.folds_for(&prepared.data)?;
    let mapper = hyperparameter_mapper(model.clone(), prep.scalers.clone(), factors.to_vec())?;
    let trainer = AucTrainer {
        scaler_columns: prepared.scaler_columns.clone(),
    };
    let rows = run_experiment(&prepared.data, &oa, &mapper, &trainer, &folds, ctx.seed)?;
    let selection = main_effects_select(&oa, &rows)?;
    let best = &rows[selection.best_observed_row];
    let best_model = best
        .config
        .as_ref()
        .map(|c| c.model.clone())
        .ok_or_else(|| Error::Training("best row has no configuration".into()))?;
    Ok(TuneHparamsReport {
        oa: oa.name.clone(),
        model: model.name().to_string(),
        factors: factors.to_vec(),
        best_hyperparameters: levels_to_settings(factors, &best.levels),
        predicted_best_hyperparameters: levels_to_settings(factors, &selection.predicted_best_levels),
        best_model,
        best_mean_roc_auc: selection.best_observed_mean,
        configurations_trained: rows.len(),
        model_fits: rows.len() * folds.k,
        rows,
        selection,
    })
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ModelSpec,
    pub features: Vec<String>,
    pub scalers: ScalerSequence,
    pub folds: Vec<MetricsReport>,
    pub aggregate: MetricsReport,
}

/// Fits the full pipeline on every row: feature selection, scalers, model.
pub fn fit_pipeline(
    ds: &Dataset,
    model: &ModelSpec,
    prep: &Preprocessing,
    prepared: &PreparedData,
    seed: u64,
) -> Result<FittedPipeline> {
    let scalers = fit_sequence_on(&prep.scalers, prepared.data.x(), prepared.scaler_columns.as_deref())?;
    let scaled = prepared.data.with_matrix(scalers.apply(prepared.data.x())?)?;
    let trained = model.with_seed(derive_seed(seed, FINAL_FIT_STREAM, 0)).fit(&scaled)?;
    Ok(FittedPipeline {
        source_features: ds.feature_names().to_vec(),
        feature_ids: prepared.feature_ids.clone(),
        scalers: Some(scalers),
        model: trained,
    })
}

/// Cross-validated metrics of the configuration, then the final fit on all rows.
pub fn cmd_train(
    ds: &Dataset,
    model: &ModelSpec,
    prep: &Preprocessing,
    ctx: &RunContext,
) -> Result<(FittedPipeline, TrainReport)> {
    let prepared = prep.prepare(ds)?;
    let folds = ctx.folds_for(&prepared.data)?;
    let cfg = TrialConfig {
        scalers: prep.scalers.clone(),
        model: model.clone(),
    };
    let evals = cross_validate(
        &prepared.data,
        &cfg,
        prepared.scaler_columns.as_deref(),
        &folds,
        ctx.seed,
        ctx.threshold,
        false,
    )?;
    let aggregate = aggregate_tests(&evals)?;
    let pipeline = fit_pipeline(ds, model, prep, &prepared, ctx.seed)?;
    Ok((
        pipeline,
        TrainReport {
            model: model.clone(),
            features: prepared.data.feature_names().to_vec(),
            scalers: prep.scalers.clone(),
            folds: evals.into_iter().map(|e| e.test).collect(),
            aggregate,
        },
    ))
}

// ---------------------------------------------------------------- feature sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub features: Vec<String>,
    pub metrics: MetricsReport,
    pub fold_roc_auc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSweepReport {
    /// Candidate features ranked by the full-feature model's importances.
    pub ranking: Vec<String>,
    pub split_pairs: bool,
    pub rows: Vec<SweepRow>,
    /// Smallest k whose mean ROC-AUC equals the sweep maximum.
    pub chosen_k: usize,
    pub chosen_roc_auc: f64,
    pub selected_features: Vec<String>,
}

/// Ranks the candidate features with an EBM fitted on all rows, then
/// cross-validates the top-k subset for every k in `k_min..=k_max`.
pub fn cmd_feature_sweep(
    ds: &Dataset,
    model: &ModelSpec,
    k_min: usize,
    k_max: Option<usize>,
    split_pairs: bool,
    prep: &Preprocessing,
    ctx: &RunContext,
) -> Result<FeatureSweepReport> {
    if !matches!(model, ModelSpec::Ebm(_)) {
        return Err(Error::validation(format!(
            "feature sweep ranks features with an EBM, got '{}'",
            model.name()
        )));
    }
    let prepared = prep.prepare(ds)?;
    let p = prepared.data.n_features();
    let k_max = k_max.unwrap_or(p.min(30));
    if k_min < 1 || k_min > k_max {
        return Err(Error::validation(format!("need 1 <= k_min <= k_max, got {k_min}..{k_max}")));
    }
    if k_max > p {
        return Err(Error::validation(format!("k_max = {k_max} exceeds the {p} available features")));
    }
    let full = fit_pipeline(ds, model, prep, &prepared, ctx.seed)?;
    let ebm = full.model.as_ebm().expect("model spec is an EBM");
    let ranking = ebm.ranked_features(split_pairs);
    let names = prepared.data.feature_names();
    let folds = ctx.folds_for(&prepared.data)?;

    let rows = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut top = ranking[..k].to_vec();
            top.sort_unstable();
            let subset = prepared.data.select_features(&top)?;
            let scaler_columns: Option<Vec<usize>> = prepared.scaler_columns.as_ref().map(|cols| {
                top.iter()
                    .enumerate()
                    .filter(|(_, j)| cols.contains(j))
                    .map(|(pos, _)| pos)
                    .collect()
            });
            let cfg = TrialConfig {
                scalers: prep.scalers.clone(),
                model: model.clone(),
            };
            let evals = cross_validate(
                &subset,
                &cfg,
                scaler_columns.as_deref(),
                &folds,
                ctx.seed,
                ctx.threshold,
                false,
            )?;
            Ok(SweepRow {
                k,
                features: ranking[..k].iter().map(|&j| names[j].clone()).collect(),
                fold_roc_auc: evals.iter().map(|e| e.test.roc_auc).collect(),
                metrics: aggregate_tests(&evals)?,
            })
        })
        .collect::<Result<Vec<SweepRow>>>()?;

    let mut chosen = &rows[0];
    for r in &rows[1..] {
        if r.metrics.roc_auc > chosen.metrics.roc_auc {
            chosen = r;
        }
    }
    Ok(FeatureSweepReport {
        ranking: ranking.iter().map(|&j| names[j].clone()).collect(),
        split_pairs,
        chosen_k: chosen.k,
        chosen_roc_auc: chosen.metrics.roc_auc,
        selected_features: chosen.features.clone(),
        rows,
    })
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub model: String,
    pub display_name: String,
    pub spec: ModelSpec,
    /// Fold of every row as used for this model.
    pub fold_assignment: Vec<usize>,
    pub folds: Vec<MetricsReport>,
    /// `None` when this model failed; see `error`.
    pub aggregate: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub features: Vec<String>,
    pub scalers: ScalerSequence,
    pub rows: Vec<CompareRow>,
}

/// Cross-validates every model on the same features and folds. A model that
/// fails gets an error row; the command fails only when every model does.
pub fn cmd_compare(ds: &Dataset, models: &[ModelSpec], prep: &Preprocessing, ctx: &RunContext) -> Result<CompareReport> {
    if models.is_empty() {
        return Err(Error::validation("no models to compare"));
    }
    let prepared = prep.prepare(ds)?;
    let folds = ctx.folds_for(&prepared.data)?;
    let rows: Vec<CompareRow> = models
        .iter()
        .map(|spec| {
            let cfg = TrialConfig {
                scalers: prep.scalers.clone(),
                model: spec.clone(),
            };
            let outcome = cross_validate(
                &prepared.data,
                &cfg,
                prepared.scaler_columns.as_deref(),
                &folds,
                ctx.seed,
                ctx.threshold,
                false,
            )
            .and_then(|evals| Ok((aggregate_tests(&evals)?, evals)));
            let mut row = CompareRow {
                model: spec.name().to_string(),
                display_name: display_name(spec).to_string(),
                spec: spec.clone(),
                fold_assignment: folds.assignment.clone(),
                folds: Vec::new(),
                aggregate: None,
                error: None,
            };
            match outcome {
                Ok((aggregate, evals)) => {
                    row.folds = evals.into_iter().map(|e| e.test).collect();
                    row.aggregate = Some(aggregate);
                }
                Err(e) => {
                    log::warn!("model '{}' failed: {e}", spec.name());
                    row.error = Some(e.to_string());
                }
            }
            row
        })
        .collect();
    if rows.iter().all(|r| r.error.is_some()) {
        return Err(Error::Training("every model in the comparison failed".into()));
    }
    Ok(CompareReport {
        features: prepared.data.feature_names().to_vec(),
        scalers: prep.scalers.clone(),
        rows,
    })
}

// ---------------------------------------------------------------- overfit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitFold {
    pub fold: usize,
    pub train: f64,
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitRun {
    pub model: ModelSpec,
    pub metric: Metric,
    pub folds: Vec<OverfitFold>,
    pub report: OverfitReport,
}

/// Cross-validation that keeps training-split scores next to held-out scores.
pub fn cmd_check_overfit(
    ds: &Dataset,
    model: &ModelSpec,
    metric: Metric,
    overfit_threshold: f64,
    prep: &Preprocessing,
    ctx: &RunContext,
) -> Result<OverfitRun> {
    let prepared = prep.prepare(ds)?;
    let folds = ctx.folds_for(&prepared.data)?;
    let cfg = TrialConfig {
        scalers: prep.scalers.clone(),
        model: model.clone(),
    };
    let evals = cross_validate(
        &prepared.data,
        &cfg,
        prepared.scaler_columns.as_deref(),
        &folds,
        ctx.seed,
        ctx.threshold,
        true,
    )?;
    let per_fold: Vec<OverfitFold> = evals
        .iter()
        .map(|e| OverfitFold {
            fold: e.fold,
            train: metric.of(e.train.as_ref().expect("train scores requested")),
            test: metric.of(&e.test),
        })
        .collect();
    let train: Vec<f64> = per_fold.iter().map(|f| f.train).collect();
    let test: Vec<f64> = per_fold.iter().map(|f| f.test).collect();
    Ok(OverfitRun {
        model: model.clone(),
        metric,
        report: overfit_gap(&train, &test, overfit_threshold)?,
        folds: per_fold,
    })
}

//! The experiment workflow behind the command-line tool.
//!
//! Every verb is a [`Command`] inside a [`RunManifest`]. [`execute`] loads the
//! input, runs the command in memory (the `cmd_*` functions, also usable
//! directly) and writes JSON reports plus CSV mirrors into an output directory.
//! Each JSON report names the manifest it came from by file name and digest;
//! executing the same manifest again reproduces every file byte for byte.

mod commands;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use commands::{
    cmd_check_overfit, cmd_compare, cmd_eda, cmd_feature_sweep, cmd_train, cmd_tune_hparams, cmd_tune_scalers,
    cross_validate, describe_settings, display_name, fit_pipeline, levels_to_settings, prepare, resolve_names,
    CompareReport, CompareRow, EdaReport, FeatureSweepReport, FoldEvaluation, OverfitFold, OverfitRun, PreparedData,
    RunContext, SweepRow, TrainReport, TuneHparamsReport, TuneScalersReport,
};
pub use manifest::{digest, Command, CvConfig, ExplainMode, Preprocessing, RunManifest, MANIFEST_FILE};

use crate::dataset::{load_csv, Dataset};
use crate::doe::ExperimentResult;
use crate::eda::CorrelationMatrix;
use crate::ebm::{GlobalExplanation, TermContribution};
use crate::error::{Error, Result};
use crate::model::{self, FittedPipeline};

/// How a report points back at its manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestRef {
    pub file: String,
    pub digest: String,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest: &'a ManifestRef,
    #[serde(flatten)]
    report: &'a T,
}

/// One output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// The manifest as executed, with digests filled in.
    pub manifest: RunManifest,
    /// Every file written, the manifest first.
    pub files: Vec<PathBuf>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Records `found` on the first run and insists on it afterwards.
fn check_digest(slot: &mut Option<String>, found: String, what: &Path) -> Result<()> {
    match slot {
        Some(expected) if *expected != found => Err(Error::validation(format!(
            "{} changed since the manifest was written ({expected} != {found})",
            what.display()
        ))),
        Some(_) => Ok(()),
        None => {
            *slot = Some(found);
            Ok(())
        }
    }
}

fn validate(manifest: &RunManifest) -> Result<()> {
    if manifest.cv.scheme != "stratified_kfold" {
        return Err(Error::validation(format!(
            "unsupported cross-validation scheme '{}'",
            manifest.cv.scheme
        )));
    }
    if manifest.cv.folds < 2 {
        return Err(Error::validation(format!("folds must be at least 2, got {}", manifest.cv.folds)));
    }
    if !(0.0..=1.0).contains(&manifest.threshold) {
        return Err(Error::validation(format!(
            "threshold must be in [0, 1], got {}",
            manifest.threshold
        )));
    }
    if let Command::Explain {
        mode: ExplainMode::Local,
        row: None,
        ..
    } = manifest.command
    {
        return Err(Error::validation("local explanations need a row index"));
    }
    Ok(())
}

/// Runs the manifest's command and writes its files into `out_dir` (created if
/// missing). The manifest itself is written first, as `manifest.json`.
pub fn execute(mut manifest: RunManifest, out_dir: impl AsRef<Path>) -> Result<RunOutcome> {
    let out_dir = out_dir.as_ref();
    validate(&manifest)?;

    let data = if manifest.command.needs_input() {
        let path = manifest
            .input
            .clone()
            .ok_or_else(|| Error::validation(format!("'{}' needs an input file", manifest.command.name())))?;
        check_digest(&mut manifest.input_digest, digest(&read_bytes(&path)?), &path)?;
        Some(load_csv(&path, &manifest.label_column)?)
    } else {
        None
    };
    let pipeline = if let Command::Explain {
        model_file,
        model_digest,
        ..
    } = &mut manifest.command
    {
        let bytes = read_bytes(model_file)?;
        check_digest(model_digest, digest(&bytes), model_file)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?;
        Some(model::from_json(&text)?)
    } else {
        None
    };
    manifest.outputs = manifest.command.output_files();

    let manifest_text = manifest.to_json()?;
    let reference = ManifestRef {
        file: MANIFEST_FILE.into(),
        digest: digest(manifest_text.as_bytes()),
    };
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, &manifest_text).map_err(|e| Error::io(&manifest_path, e))?;

    log::info!("running {}", manifest.command.name());
    let artifacts = run_command(&manifest, data.as_ref(), pipeline.as_ref(), &reference)?;
    debug_assert_eq!(
        artifacts.iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
        manifest.outputs
    );
    let mut files = vec![manifest_path];
    for a in artifacts {
        let path = out_dir.join(&a.name);
        fs::write(&path, a.contents).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    Ok(RunOutcome { manifest, files })
}

fn context(m: &RunManifest) -> RunContext {
    RunContext {
        seed: m.seed,
        folds: m.cv.folds,
        threshold: m.threshold,
    }
}

fn json_report<T: Serialize>(reference: &ManifestRef, report: &T) -> Result<String> {
    let envelope = Envelope {
        manifest: reference,
        report,
    };
    Ok(serde_json::to_string_pretty(&envelope)? + "\n")
}

fn plain_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn artifact(name: impl Into<String>, contents: String) -> Artifact {
    Artifact {
        name: name.into(),
        contents,
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// One line per array row: levels, description, fold scores, mean and S/N.
fn experiment_csv(rows: &[ExperimentResult], describe: impl Fn(&ExperimentResult) -> String) -> Result<String> {
    let k = rows.iter().map(|r| r.fold_scores.len()).max().unwrap_or(0);
    let mut header: Vec<String> = vec!["row".into(), "levels".into(), "configuration".into()];
    header.extend((1..=k).map(|f| format!("fold{f}_roc_auc")));
    header.extend(["mean_roc_auc".into(), "sn_ratio_db".into(), "error".into()]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut line = vec![
                (r.row + 1).to_string(),
                r.levels.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                describe(r),
            ];
            for f in 0..k {
                line.push(r.fold_scores.get(f).map(|&v| fmt6(v)).unwrap_or_default());
            }
            line.push(r.mean.map(fmt6).unwrap_or_default());
            line.push(r.sn_ratio.map(fmt6).unwrap_or_default());
            line.push(r.error.clone().unwrap_or_default());
            line
        })
        .collect();
    csv_table(&header_refs, &body)
}

fn metrics_row(label: String, r: &crate::metrics::MetricsReport) -> Vec<String> {
    vec![label, fmt6(r.precision), fmt6(r.recall), fmt6(r.roc_auc), fmt6(r.f1)]
}

#[derive(Serialize)]
struct CorrelationReport<'a> {
    #[serde(flatten)]
    matrix: &'a CorrelationMatrix,
    symmetric: bool,
    /// How to read a cell.
    orientation: &'static str,
    includes_label: bool,
}

#[derive(Serialize)]
struct TrainReportFile<'a> {
    #[serde(flatten)]
    report: &'a TrainReport,
    model_file: &'static str,
    model_digest: String,
}

#[derive(Serialize)]
struct GlobalReport<'a> {
    model_file: &'a Path,
    model_digest: &'a Option<String>,
    explanation: &'a GlobalExplanation,
}

#[derive(Serialize)]
struct InputValue {
    feature: String,
    raw: f64,
    transformed: f64,
}

#[derive(Serialize)]
struct LocalReport<'a> {
    model_file: &'a Path,
    model_digest: &'a Option<String>,
    row: usize,
    inputs: Vec<InputValue>,
    sign_convention: &'static str,
    intercept: f64,
    /// Sorted by decreasing magnitude.
    contributions: Vec<&'a TermContribution>,
    logit: f64,
    proba: f64,
}

fn run_command(
    m: &RunManifest,
    data: Option<&Dataset>,
    pipeline: Option<&FittedPipeline>,
    reference: &ManifestRef,
) -> Result<Vec<Artifact>> {
    let ctx = context(m);
    let ds = || data.ok_or_else(|| Error::validation("missing input data"));
    match &m.command {
        Command::Eda {
            methods,
            label_in_correlations,
            vif_bootstrap,
            vif_include_label,
        } => {
            let report = cmd_eda(
                ds()?,
                &m.label_column,
                methods,
                *label_in_correlations,
                *vif_bootstrap,
                *vif_include_label,
                &ctx,
            )?;
            let mut out = Vec::new();
            for matrix in &report.correlations {
                let symmetric = matrix.method.is_symmetric();
                let body = CorrelationReport {
                    matrix,
                    symmetric,
                    orientation: if symmetric {
                        "symmetric"
                    } else {
                        "cell (row, column) is the dependence of column on row: xi(row -> column)"
                    },
                    includes_label: report.label_in_correlations,
                };
                let stem = format!("corr_{}", matrix.method.name());
                out.push(artifact(format!("{stem}.json"), json_report(reference, &body)?));
                out.push(artifact(format!("{stem}.csv"), matrix.to_csv()));
            }
            #[derive(Serialize)]
            struct VifReport<'a> {
                #[serde(flatten)]
                table: &'a crate::eda::VifTable,
                includes_label: bool,
            }
            let vif = VifReport {
                table: &report.vif,
                includes_label: report.vif_includes_label,
            };
            out.push(artifact("vif.json", json_report(reference, &vif)?));
            out.push(artifact("vif.csv", report.vif.to_csv()));
            Ok(out)
        }
        Command::TuneScalers {
            oa,
            model,
            scaler_params,
            features,
            scaler_columns,
        } => {
            let prepared = prepare(ds()?, features.as_deref(), scaler_columns.as_deref())?;
            let report = cmd_tune_scalers(oa, model, scaler_params, &prepared, &ctx)?;
            let csv = experiment_csv(&report.rows, |r| {
                r.config.as_ref().map(|c| c.scalers.describe()).unwrap_or_default()
            })?;
            Ok(vec![
                artifact("scaler_experiments.json", json_report(reference, &report)?),
                artifact("scaler_experiments.csv", csv),
                artifact("scalers.json", plain_json(&report.adopted)?),
            ])
        }
        Command::TuneHparams {
            oa,
            model,
            factors,
            preprocessing,
        } => {
            let prepared = preprocessing.prepare(ds()?)?;
            let report = cmd_tune_hparams(oa, model, factors, preprocessing, &prepared, &ctx)?;
            let csv = experiment_csv(&report.rows, |r| describe_settings(factors, &r.levels))?;
            let best = &report.rows[report.selection.best_observed_row];
            let summary = csv_table(
                &["model", "hyperparameters", "roc_auc"],
                &[vec![
                    display_name(model).to_string(),
                    describe_settings(factors, &best.levels),
                    fmt6(report.best_mean_roc_auc),
                ]],
            )?;
            Ok(vec![
                artifact("hparam_experiments.json", json_report(reference, &report)?),
                artifact("hparam_experiments.csv", csv),
                artifact("hparam_summary.csv", summary),
                artifact("best_model.json", plain_json(&report.best_model)?),
            ])
        }
        Command::Train { model, preprocessing } => {
            let (pipeline, report) = cmd_train(ds()?, model, preprocessing, &ctx)?;
            let model_json = model::to_json(&pipeline)?;
            let file = TrainReportFile {
                report: &report,
                model_file: "model.json",
                model_digest: digest(model_json.as_bytes()),
            };
            let mut rows: Vec<Vec<String>> = report
                .folds
                .iter()
                .enumerate()
                .map(|(f, r)| metrics_row((f + 1).to_string(), r))
                .collect();
            rows.push(metrics_row("aggregate".into(), &report.aggregate));
            Ok(vec![
                artifact("train_report.json", json_report(reference, &file)?),
                artifact(
                    "train_report.csv",
                    csv_table(&["fold", "precision", "recall", "roc_auc", "f1"], &rows)?,
                ),
                artifact("model.json", model_json),
            ])
        }
        Command::FeatureSweep {
            model,
            k_min,
            k_max,
            split_pairs,
            preprocessing,
        } => {
            let report = cmd_feature_sweep(ds()?, model, *k_min, *k_max, *split_pairs, preprocessing, &ctx)?;
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    let mut line = metrics_row(r.k.to_string(), &r.metrics);
                    line.push(r.features.last().cloned().unwrap_or_default());
                    line
                })
                .collect();
            Ok(vec![
                artifact("feature_sweep.json", json_report(reference, &report)?),
                artifact(
                    "feature_sweep.csv",
                    csv_table(&["k", "precision", "recall", "roc_auc", "f1", "added_feature"], &rows)?,
                ),
                artifact("selected_features.json", plain_json(&report.selected_features)?),
            ])
        }
        Command::Compare { models, preprocessing } => {
            let report = cmd_compare(ds()?, models, preprocessing, &ctx)?;
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| match &r.aggregate {
                    Some(a) => {
                        let mut line = metrics_row(r.display_name.clone(), a);
                        line.push(String::new());
                        line
                    }
                    None => vec![
                        r.display_name.clone(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        r.error.clone().unwrap_or_default(),
                    ],
                })
                .collect();
            Ok(vec![
                artifact("comparison.json", json_report(reference, &report)?),
                artifact(
                    "comparison.csv",
                    csv_table(&["model", "precision", "recall", "roc_auc", "f1", "error"], &rows)?,
                ),
            ])
        }
        Command::CheckOverfit {
            model,
            metric,
            overfit_threshold,
            preprocessing,
        } => {
            let run = cmd_check_overfit(ds()?, model, *metric, *overfit_threshold, preprocessing, &ctx)?;
            let mut rows: Vec<Vec<String>> = run
                .folds
                .iter()
                .map(|f| vec![(f.fold + 1).to_string(), fmt6(f.train), fmt6(f.test), fmt6(f.train - f.test)])
                .collect();
            let r = &run.report;
            rows.push(vec!["mean".into(), fmt6(r.mean_train), fmt6(r.mean_test), fmt6(r.gap)]);
            Ok(vec![
                artifact("overfit.json", json_report(reference, &run)?),
                artifact("overfit.csv", csv_table(&["fold", "train", "test", "gap"], &rows)?),
            ])
        }
        Command::Explain {
            model_file,
            model_digest,
            mode,
            row,
        } => {
            let pipeline = pipeline.ok_or_else(|| Error::validation("missing model"))?;
            let ebm = pipeline.model.as_ebm().ok_or_else(|| {
                Error::validation(format!("explanations need an EBM model, got '{}'", pipeline.model.kind()))
            })?;
            match (mode, row) {
                (ExplainMode::Global, _) => {
                    let explanation = ebm.explain_global();
                    let body = GlobalReport {
                        model_file,
                        model_digest,
                        explanation: &explanation,
                    };
                    Ok(vec![
                        artifact("explain_global.json", json_report(reference, &body)?),
                        artifact("explain_global.csv", explanation.to_csv()),
                    ])
                }
                (ExplainMode::Local, Some(r)) => {
                    let data = ds()?;
                    if *r >= data.n_rows() {
                        return Err(Error::validation(format!(
                            "row {r} out of range: the input has {} rows",
                            data.n_rows()
                        )));
                    }
                    if data.feature_names() != pipeline.source_features.as_slice() {
                        return Err(Error::validation(
                            "input columns differ from the columns the model was trained on",
                        ));
                    }
                    let raw = data.x().select(ndarray::Axis(0), &[*r]);
                    let transformed = pipeline.transform(&raw)?.row(0).to_vec();
                    let local = ebm.explain_local(&transformed)?;
                    let inputs = pipeline
                        .feature_ids
                        .iter()
                        .zip(&transformed)
                        .map(|(&j, &t)| InputValue {
                            feature: pipeline.source_features[j].clone(),
                            raw: raw[[0, j]],
                            transformed: t,
                        })
                        .collect();
                    let body = LocalReport {
                        model_file,
                        model_digest,
                        row: *r,
                        inputs,
                        sign_convention: "negative contributions push toward class 0, positive toward class 1",
                        intercept: local.intercept,
                        contributions: local.sorted_by_magnitude(),
                        logit: local.logit,
                        proba: local.proba,
                    };
                    let stem = format!("explain_local_row{r}");
                    Ok(vec![
                        artifact(format!("{stem}.json"), json_report(reference, &body)?),
                        artifact(format!("{stem}.csv"), local.to_csv()),
                    ])
                }
                (ExplainMode::Local, None) => Err(Error::validation("local explanations need a row index")),
            }
        }
    }
}

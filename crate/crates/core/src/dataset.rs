//! Tabular binary-classification data: loading, stratified folds, column subsets.

use std::collections::HashSet;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_LABEL_COLUMN: &str = "Class";

/// Immutable feature matrix plus 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    x: Array2<f64>,
    y: Vec<u8>,
}

impl Dataset {
    /// Builds a dataset, rejecting non-finite cells, labels outside {0, 1},
    /// duplicate names and shape mismatches. Single-class label vectors are allowed
    /// here; stratification and training reject them.
    pub fn new(feature_names: Vec<String>, x: Array2<f64>, y: Vec<u8>) -> Result<Self> {
        if feature_names.len() != x.ncols() {
            return Err(Error::validation(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        if y.len() != x.nrows() {
            return Err(Error::validation(format!(
                "{} labels for {} rows",
                y.len(),
                x.nrows()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::validation(format!("duplicate feature name '{name}'")));
            }
        }
        if let Some(pos) = y.iter().position(|&v| v > 1) {
            return Err(Error::validation(format!(
                "label {} at row {pos} is not 0 or 1",
                y[pos]
            )));
        }
        for ((row, col), v) in x.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: feature_names[col].clone(),
                    message: format!("non-finite value {v}"),
                });
            }
        }
        Ok(Dataset {
            feature_names,
            x,
            y,
        })
    }

    /// Same as [`Dataset::new`] with generated names `x0, x1, ...`.
    pub fn from_parts(x: Array2<f64>, y: Vec<u8>) -> Result<Self> {
        let names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new(names, x, y)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_positive(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    pub fn n_negative(&self) -> usize {
        self.n_rows() - self.n_positive()
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.n_positive();
        pos > 0 && pos < self.n_rows()
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.has_both_classes() {
            Ok(())
        } else {
            Err(Error::SingleClass(format!(
                "{} positives among {} rows",
                self.n_positive(),
                self.n_rows()
            )))
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.column(j).to_vec()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).to_vec()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// New dataset with the requested columns, in the requested order.
    pub fn select_features(&self, feature_ids: &[usize]) -> Result<Dataset> {
        let p = self.n_features();
        let mut seen = HashSet::new();
        for &j in feature_ids {
            if j >= p {
                return Err(Error::validation(format!(
                    "feature index {j} out of range for {p} features"
                )));
            }
            if !seen.insert(j) {
                return Err(Error::validation(format!("duplicate feature index {j}")));
            }
        }
        let x = self.x.select(Axis(1), feature_ids);
        let names = feature_ids
            .iter()
            .map(|&j| self.feature_names[j].clone())
            .collect();
        Ok(Dataset {
            feature_names: names,
            x,
            y: self.y.clone(),
        })
    }

    /// Rows in the given order (repeats allowed).
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select(Axis(0), rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Same labels and names with a replacement matrix of identical shape.
    pub fn with_matrix(&self, x: Array2<f64>) -> Result<Dataset> {
        if x.dim() != self.x.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.ncols(),
            });
        }
        Dataset::new(self.feature_names.clone(), x, self.y.clone())
    }

    /// Appends the label as an extra numeric column (used for diagnostics that
    /// treat the response like a feature).
    pub fn with_label_as_feature(&self, label_name: &str) -> Result<Dataset> {
        let n = self.n_rows();
        let p = self.n_features();
        let mut x = Array2::zeros((n, p + 1));
        x.slice_mut(ndarray::s![.., ..p]).assign(&self.x);
        for (i, &label) in self.y.iter().enumerate() {
            x[[i, p]] = f64::from(label);
        }
        let mut names = self.feature_names.clone();
        names.push(label_name.to_string());
        Dataset::new(names, x, self.y.clone())
    }
}

/// Writes the features followed by the label column under `label_column`.
/// Values use the shortest representation that reads back to the same float.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(label_column);
    w.write_record(&header).map_err(io_err)?;
    for (row, &label) in ds.x.rows().into_iter().zip(&ds.y) {
        let mut record: Vec<String> = row.iter().map(f64::to_string).collect();
        record.push(label.to_string());
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a UTF-8 comma-separated file with a header row. Every column other than
/// `label_column` becomes a feature, in file order.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            Error::validation(format!(
                "label column '{label_column}' not found in header of {}",
                path.display()
            ))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let p = feature_names.len();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if col == label_idx {
                labels.push(parse_label(cell).ok_or_else(|| Error::Parse {
                    row,
                    column: headers[col].clone(),
                    message: format!("label '{cell}' is not 0 or 1"),
                })?);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[col].clone(),
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[col].clone(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            values.push(v);
        }
    }
    let n = labels.len();
    let x = Array2::from_shape_vec((n, p), values)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Dataset::new(feature_names, x, labels)
}

fn parse_label(cell: &str) -> Option<u8> {
    match cell {
        "0" => Some(0),
        "1" => Some(1),
        _ => match cell.parse::<f64>() {
            Ok(v) if v == 0.0 => Some(0),
            Ok(v) if v == 1.0 => Some(1),
            _ => None,
        },
    }
}

/// Assignment of every row to one of `k` folds with per-class balance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifiedFolds {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl StratifiedFolds {
    /// Training rows (all folds but `fold`) and validation rows (`fold`), in row order.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut valid = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                valid.push(i);
            } else {
                train.push(i);
            }
        }
        (train, valid)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles each class with the seed, then deals its rows round-robin into `k`
/// folds. Negatives continue the deal where positives stopped so fold sizes also
/// stay within one of each other.
pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<StratifiedFolds> {
    if k < 2 {
        return Err(Error::validation(format!("k must be at least 2, got {k}")));
    }
    let n_pos = ds.n_positive();
    let n_neg = ds.n_negative();
    if k > n_pos.min(n_neg) {
        let (class, count) = if n_pos <= n_neg {
            ("positive (1)", n_pos)
        } else {
            ("negative (0)", n_neg)
        };
        return Err(Error::validation(format!(
            "k exceeds minority class count: k={k} but class {class} has {count} rows"
        )));
    }
    let mut positives: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.y[i] == 1).collect();
    let mut negatives: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.y[i] == 0).collect();
    positives.shuffle(&mut stats::rng(stats::derive_seed(seed, 1, 1)));
    negatives.shuffle(&mut stats::rng(stats::derive_seed(seed, 1, 0)));

    let mut assignment = vec![0usize; ds.n_rows()];
    for (pos, &row) in positives.iter().enumerate() {
        assignment[row] = pos % k;
    }
    let offset = n_pos % k;
    for (pos, &row) in negatives.iter().enumerate() {
        assignment[row] = (pos + offset) % k;
    }
    Ok(StratifiedFolds {
        k,
        seed,
        assignment,
    })
}

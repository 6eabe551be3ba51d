//! Classification metrics and the train/test overfitting gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_OVERFIT_THRESHOLD: f64 = 0.1;

/// Rank-based (Mann-Whitney) ROC-AUC. Tied scores share their average rank, which
/// gives half credit to tied positive/negative pairs.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::validation(format!(
            "{} labels for {} scores",
            labels.len(),
            scores.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass(
            "ROC-AUC needs both classes present".into(),
        ));
    }
    let ranks = stats::average_ranks(scores);
    let rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&l, _)| l == 1)
        .map(|(_, &r)| r)
        .sum();
    let n_pos = n_pos as f64;
    let u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(labels: &[u8], preds: &[u8]) -> Result<Self> {
        if labels.len() != preds.len() {
            return Err(Error::validation(format!(
                "{} labels for {} predictions",
                labels.len(),
                preds.len()
            )));
        }
        let mut c = Confusion::default();
        for (&l, &p) in labels.iter().zip(preds) {
            match (l, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, 0) => c.tn += 1,
                _ => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Precision / recall / F1 with explicit flags where a denominator was zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub confusion: Confusion,
}

pub fn precision_recall_f1(labels: &[u8], preds: &[u8]) -> Result<PrecisionRecall> {
    let c = Confusion::from_predictions(labels, preds)?;
    Ok(precision_recall_from_confusion(c))
}

pub fn precision_recall_from_confusion(c: Confusion) -> PrecisionRecall {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            (0.0, true)
        } else {
            (num as f64 / den as f64, false)
        }
    };
    let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    PrecisionRecall {
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
        confusion: c,
    }
}

/// Which fold a report describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldId {
    Fold(usize),
    Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub roc_auc: f64,
    pub f1: f64,
    pub threshold: f64,
    pub confusion: Confusion,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub fold: FoldId,
}

impl MetricsReport {
    /// Thresholds probabilities (`proba >= threshold` is positive) and scores them.
    pub fn evaluate(labels: &[u8], probas: &[f64], threshold: f64, fold: FoldId) -> Result<Self> {
        let roc_auc = roc_auc(labels, probas)?;
        let preds: Vec<u8> = probas.iter().map(|&p| u8::from(p >= threshold)).collect();
        let pr = precision_recall_f1(labels, &preds)?;
        Ok(MetricsReport {
            precision: pr.precision,
            recall: pr.recall,
            roc_auc,
            f1: pr.f1,
            threshold,
            confusion: pr.confusion,
            precision_undefined: pr.precision_undefined,
            recall_undefined: pr.recall_undefined,
            fold,
        })
    }

    /// Averages per-fold reports: metric means, summed confusion counts.
    pub fn aggregate(folds: &[MetricsReport]) -> Result<Self> {
        let first = folds
            .first()
            .ok_or_else(|| Error::validation("no fold reports to aggregate"))?;
        let m = folds.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| folds.iter().map(f).sum::<f64>() / m;
        let mut confusion = Confusion::default();
        for r in folds {
            confusion.tp += r.confusion.tp;
            confusion.fp += r.confusion.fp;
            confusion.tn += r.confusion.tn;
            confusion.fn_ += r.confusion.fn_;
        }
        Ok(MetricsReport {
            precision: avg(|r| r.precision),
            recall: avg(|r| r.recall),
            roc_auc: avg(|r| r.roc_auc),
            f1: avg(|r| r.f1),
            threshold: first.threshold,
            confusion,
            precision_undefined: folds.iter().any(|r| r.precision_undefined),
            recall_undefined: folds.iter().any(|r| r.recall_undefined),
            fold: FoldId::Aggregate,
        })
    }

    pub const CSV_HEADER: &'static str = "precision,recall,roc_auc,f1";

    /// Metric columns in table order: Precision, Recall, ROC-AUC, F1.
    pub fn csv_fields(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6}",
            self.precision, self.recall, self.roc_auc, self.f1
        )
    }
}

/// A single score picked out of a [`MetricsReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RocAuc,
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::RocAuc => "roc_auc",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [Metric::RocAuc, Metric::Precision, Metric::Recall, Metric::F1]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown metric '{s}' (roc_auc, precision, recall, f1)")))
    }

    pub fn of(&self, r: &MetricsReport) -> f64 {
        match self {
            Metric::RocAuc => r.roc_auc,
            Metric::Precision => r.precision,
            Metric::Recall => r.recall,
            Metric::F1 => r.f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitReport {
    pub mean_train: f64,
    pub mean_test: f64,
    pub gap: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Mean train score minus mean test score; passes when the gap is below `threshold`.
pub fn overfit_gap(train_scores: &[f64], test_scores: &[f64], threshold: f64) -> Result<OverfitReport> {
    if train_scores.is_empty() || test_scores.is_empty() {
        return Err(Error::validation("overfit gap needs non-empty score lists"));
    }
    let mean_train = stats::mean(train_scores);
    let mean_test = stats::mean(test_scores);
    let gap = mean_train - mean_test;
    Ok(OverfitReport {
        mean_train,
        mean_test,
        gap,
        threshold,
        pass: gap < threshold,
    })
}

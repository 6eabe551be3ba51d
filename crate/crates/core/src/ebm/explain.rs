use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EbmModel;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Univariate,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermContribution {
    pub term: String,
    pub kind: TermKind,
    pub features: Vec<usize>,
    /// Log-odds; negative pushes toward class 0, positive toward class 1.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    /// Baseline log-odds before any term.
    pub intercept: f64,
    /// One entry per term, in model term order.
    pub contributions: Vec<TermContribution>,
    pub logit: f64,
    /// Probability of class 1.
    pub proba: f64,
}

impl LocalExplanation {
    /// Contributions sorted by decreasing magnitude (stable on term order).
    pub fn sorted_by_magnitude(&self) -> Vec<&TermContribution> {
        let mut v: Vec<&TermContribution> = self.contributions.iter().collect();
        v.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,contribution,direction\n");
        let _ = writeln!(out, "intercept,{},baseline", self.intercept);
        for c in self.sorted_by_magnitude() {
            let dir = if c.contribution < 0.0 {
                "toward_class_0"
            } else {
                "toward_class_1"
            };
            let _ = writeln!(out, "{},{},{}", csv_field(&c.term), c.contribution, dir);
        }
        let _ = writeln!(out, "logit,{},total", self.logit);
        let _ = writeln!(out, "proba_class_1,{},total", self.proba);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermImportance {
    pub term: String,
    pub kind: TermKind,
    pub features: Vec<usize>,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalExplanation {
    /// Sorted by decreasing importance; ties keep term order.
    pub terms: Vec<TermImportance>,
}

impl GlobalExplanation {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,term,kind,importance\n");
        for (rank, t) in self.terms.iter().enumerate() {
            let kind = match t.kind {
                TermKind::Univariate => "univariate",
                TermKind::Pair => "pair",
            };
            let _ = writeln!(out, "{},{},{},{}", rank + 1, csv_field(&t.term), kind, t.importance);
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl EbmModel {
    fn term_meta(&self, term: usize) -> (TermKind, Vec<usize>) {
        if term < self.univariate.len() {
            (TermKind::Univariate, vec![self.univariate[term].feature])
        } else {
            let (i, j) = self.pairs[term - self.univariate.len()].features;
            (TermKind::Pair, vec![i, j])
        }
    }

    /// Per-term contributions for one row. `intercept` plus the contributions in
    /// listed order equals [`EbmModel::predict_logit`] exactly.
    pub fn explain_local(&self, row: &[f64]) -> Result<LocalExplanation> {
        let values = self.term_contributions(row)?;
        let logit = self.accumulate(&values);
        let contributions = values
            .into_iter()
            .enumerate()
            .map(|(t, contribution)| {
                let (kind, features) = self.term_meta(t);
                TermContribution {
                    term: self.term_name(t),
                    kind,
                    features,
                    contribution,
                }
            })
            .collect();
        Ok(LocalExplanation {
            intercept: self.intercept,
            contributions,
            logit,
            proba: stats::sigmoid(logit),
        })
    }

    /// Every term ranked by training-weighted mean absolute score.
    pub fn explain_global(&self) -> GlobalExplanation {
        let importances = self.compute_importances();
        let mut terms: Vec<TermImportance> = importances
            .iter()
            .enumerate()
            .map(|(t, &importance)| {
                let (kind, features) = self.term_meta(t);
                TermImportance {
                    term: self.term_name(t),
                    kind,
                    features,
                    importance,
                }
            })
            .collect();
        terms.sort_by(|a, b| b.importance.total_cmp(&a.importance));
        GlobalExplanation { terms }
    }

    /// Feature ids ranked by univariate importance, ties by feature id. With
    /// `split_pairs`, each pair's importance is added half to each of its features.
    pub fn ranked_features(&self, split_pairs: bool) -> Vec<usize> {
        let importances = self.compute_importances();
        let mut per_feature = vec![0.0; self.n_features()];
        for (shape, &imp) in self.univariate.iter().zip(&importances) {
            per_feature[shape.feature] += imp;
        }
        if split_pairs {
            for (pair, &imp) in self.pairs.iter().zip(&importances[self.univariate.len()..]) {
                per_feature[pair.features.0] += 0.5 * imp;
                per_feature[pair.features.1] += 0.5 * imp;
            }
        }
        let mut ids: Vec<usize> = (0..self.n_features()).collect();
        ids.sort_by(|&a, &b| per_feature[b].total_cmp(&per_feature[a]).then(a.cmp(&b)));
        ids
    }

    pub fn top_k_features(&self, k: usize) -> Result<Vec<usize>> {
        self.top_k_features_with(k, false)
    }

    pub fn top_k_features_with(&self, k: usize, split_pairs: bool) -> Result<Vec<usize>> {
        if k < 1 || k > self.n_features() {
            return Err(Error::validation(format!(
                "k must be in [1, {}], got {k}",
                self.n_features()
            )));
        }
        let mut ids = self.ranked_features(split_pairs);
        ids.truncate(k);
        Ok(ids)
    }
}

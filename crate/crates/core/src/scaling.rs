//! Column transformers (min-max, standard, quantile, robust, Yeo-Johnson power) and
//! ordered five-slot scaler sequences.
//!
//! Every statistic is fitted per column and independently of the other columns.
//! Constant columns pass through every scaler unchanged. Standard deviations use
//! the population (divide by n) convention.

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats;

/// Number of pipeline slots in a scaler sequence.
pub const SEQUENCE_SLOTS: usize = 5;

/// CDF values are clamped into this band before the inverse-normal map.
pub const QUANTILE_CLAMP: f64 = 1e-7;

const LAMBDA_RANGE: (f64, f64) = (-5.0, 5.0);
const LAMBDA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileOutput {
    Uniform,
    Normal,
}

/// One transformer together with its parameters. Codes: 0 no-op, 1 min-max,
/// 2 standard, 3 quantile, 4 robust, 5 power (Yeo-Johnson).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalerKind {
    NoOp,
    MinMax { low: f64, high: f64 },
    Standard { with_mean: bool, with_std: bool },
    Quantile { n_quantiles: usize, output: QuantileOutput },
    Robust { q_low: f64, q_high: f64 },
    Power,
}

impl ScalerKind {
    pub fn code(&self) -> u8 {
        match self {
            ScalerKind::NoOp => 0,
            ScalerKind::MinMax { .. } => 1,
            ScalerKind::Standard { .. } => 2,
            ScalerKind::Quantile { .. } => 3,
            ScalerKind::Robust { .. } => 4,
            ScalerKind::Power => 5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalerKind::NoOp => "none",
            ScalerKind::MinMax { .. } => "minmax",
            ScalerKind::Standard { .. } => "standard",
            ScalerKind::Quantile { .. } => "quantile",
            ScalerKind::Robust { .. } => "robust",
            ScalerKind::Power => "power",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalerKind::MinMax { low, high } if !(low < high) => Err(Error::validation(format!(
                "minmax range needs low < high, got ({low}, {high})"
            ))),
            ScalerKind::Quantile { n_quantiles, .. } if n_quantiles < 2 => Err(Error::validation(
                format!("n_quantiles must be at least 2, got {n_quantiles}"),
            )),
            ScalerKind::Robust { q_low, q_high }
                if !(0.0 <= q_low && q_low < q_high && q_high <= 100.0) =>
            {
                Err(Error::validation(format!(
                    "robust quantile range needs 0 <= q_low < q_high <= 100, got ({q_low}, {q_high})"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Parameters used when a scaler is chosen by code alone (as in orthogonal-array rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub minmax: (f64, f64),
    pub standard: (bool, bool),
    pub quantile: (usize, QuantileOutput),
    pub robust: (f64, f64),
}

impl Default for ScalerParams {
    fn default() -> Self {
        ScalerParams {
            minmax: (0.0, 1.0),
            standard: (true, true),
            quantile: (1000, QuantileOutput::Uniform),
            robust: (25.0, 75.0),
        }
    }
}

impl ScalerParams {
    pub fn kind_for_code(&self, code: u8) -> Result<ScalerKind> {
        let kind = match code {
            0 => ScalerKind::NoOp,
            1 => ScalerKind::MinMax {
                low: self.minmax.0,
                high: self.minmax.1,
            },
            2 => ScalerKind::Standard {
                with_mean: self.standard.0,
                with_std: self.standard.1,
            },
            3 => ScalerKind::Quantile {
                n_quantiles: self.quantile.0,
                output: self.quantile.1,
            },
            4 => ScalerKind::Robust {
                q_low: self.robust.0,
                q_high: self.robust.1,
            },
            5 => ScalerKind::Power,
            other => return Err(Error::validation(format!("unknown scaler code {other}"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Exactly five ordered slots; a non-zero code never appears twice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerSequence {
    slots: Vec<ScalerKind>,
}

impl ScalerSequence {
    pub fn new(slots: Vec<ScalerKind>) -> Result<Self> {
        if slots.len() != SEQUENCE_SLOTS {
            return Err(Error::validation(format!(
                "scaler sequence needs {SEQUENCE_SLOTS} slots, got {}",
                slots.len()
            )));
        }
        let mut seen = [false; 6];
        for kind in &slots {
            kind.validate()?;
            let code = kind.code() as usize;
            if code != 0 && std::mem::replace(&mut seen[code], true) {
                return Err(Error::validation(format!(
                    "scaler code {code} appears more than once"
                )));
            }
        }
        Ok(ScalerSequence { slots })
    }

    pub fn from_codes(codes: &[u8], params: &ScalerParams) -> Result<Self> {
        let slots = codes
            .iter()
            .map(|&c| params.kind_for_code(c))
            .collect::<Result<Vec<_>>>()?;
        ScalerSequence::new(slots)
    }

    pub fn identity() -> Self {
        ScalerSequence {
            slots: vec![ScalerKind::NoOp; SEQUENCE_SLOTS],
        }
    }

    /// A sequence with `kind` in the first slot and no-ops elsewhere.
    pub fn single(kind: ScalerKind) -> Result<Self> {
        let mut slots = vec![ScalerKind::NoOp; SEQUENCE_SLOTS];
        slots[0] = kind;
        ScalerSequence::new(slots)
    }

    pub fn slots(&self) -> &[ScalerKind] {
        &self.slots
    }

    pub fn codes(&self) -> Vec<u8> {
        self.slots.iter().map(ScalerKind::code).collect()
    }

    pub fn describe(&self) -> String {
        self.slots
            .iter()
            .map(ScalerKind::name)
            .collect::<Vec<_>>()
            .join(">")
    }
}

/// Per-column statistics of one fitted scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnFit {
    PassThrough,
    MinMax { min: f64, max: f64 },
    Standard { mean: f64, std: f64 },
    Quantile { references: Vec<f64> },
    Robust { median: f64, iqr: f64 },
    Power { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedScaler {
    pub kind: ScalerKind,
    pub columns: Vec<ColumnFit>,
}

pub fn fit_scaler(kind: ScalerKind, x: &Array2<f64>) -> Result<FittedScaler> {
    fit_scaler_on(kind, x, None)
}

/// Fits only the listed columns; every other column passes through.
pub fn fit_scaler_on(kind: ScalerKind, x: &Array2<f64>, columns: Option<&[usize]>) -> Result<FittedScaler> {
    kind.validate()?;
    if x.nrows() == 0 {
        return Err(Error::validation("cannot fit a scaler on an empty matrix"));
    }
    let selected = column_mask(x.ncols(), columns)?;
    let columns = (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            if selected[j] {
                fit_column(kind, x.column(j))
            } else {
                ColumnFit::PassThrough
            }
        })
        .collect();
    Ok(FittedScaler { kind, columns })
}

fn column_mask(p: usize, columns: Option<&[usize]>) -> Result<Vec<bool>> {
    match columns {
        None => Ok(vec![true; p]),
        Some(cols) => {
            let mut mask = vec![false; p];
            for &c in cols {
                if c >= p {
                    return Err(Error::validation(format!(
                        "scaler column {c} out of range for {p} columns"
                    )));
                }
                mask[c] = true;
            }
            Ok(mask)
        }
    }
}

fn fit_column(kind: ScalerKind, col: ArrayView1<f64>) -> ColumnFit {
    let values = col.to_vec();
    let first = values[0];
    if kind == ScalerKind::NoOp || values.iter().all(|&v| v == first) {
        return ColumnFit::PassThrough;
    }
    match kind {
        ScalerKind::NoOp => ColumnFit::PassThrough,
        ScalerKind::MinMax { .. } => {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ColumnFit::MinMax { min, max }
        }
        ScalerKind::Standard { .. } => {
            let (mean, std) = mean_std(&values);
            ColumnFit::Standard { mean, std }
        }
        ScalerKind::Quantile { n_quantiles, .. } => {
            let sorted = stats::sorted_copy(&values);
            let m = n_quantiles.min(sorted.len());
            let references = (0..m)
                .map(|k| stats::percentile_sorted(&sorted, k as f64 / (m - 1) as f64))
                .collect();
            ColumnFit::Quantile { references }
        }
        ScalerKind::Robust { q_low, q_high } => {
            let sorted = stats::sorted_copy(&values);
            let median = stats::percentile_sorted(&sorted, 0.5);
            let iqr = stats::percentile_sorted(&sorted, q_high / 100.0)
                - stats::percentile_sorted(&sorted, q_low / 100.0);
            ColumnFit::Robust { median, iqr }
        }
        ScalerKind::Power => ColumnFit::Power {
            lambda: fit_yeo_johnson_lambda(&values),
        },
    }
}

/// Mean and population standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        return x;
    }
    if x >= 0.0 {
        if lambda.abs() < 1e-12 {
            x.ln_1p()
        } else {
            ((x + 1.0).powf(lambda) - 1.0) / lambda
        }
    } else if (lambda - 2.0).abs() < 1e-12 {
        -(-x).ln_1p()
    } else {
        -((1.0 - x).powf(2.0 - lambda) - 1.0) / (2.0 - lambda)
    }
}

/// Profile log-likelihood of the Yeo-Johnson transform under a normal model.
pub fn yeo_johnson_log_likelihood(values: &[f64], lambda: f64) -> f64 {
    let n = values.len() as f64;
    let transformed: Vec<f64> = values.iter().map(|&x| yeo_johnson(x, lambda)).collect();
    let (_, std) = mean_std(&transformed);
    let var = std * std;
    if !var.is_finite() || var <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let jacobian: f64 = values.iter().map(|&x| x.signum() * x.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jacobian
}

/// Golden-section search for the likelihood-maximizing lambda on [-5, 5].
fn fit_yeo_johnson_lambda(values: &[f64]) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = LAMBDA_RANGE;
    let objective = |l: f64| -yeo_johnson_log_likelihood(values, l);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c);
    let mut fd = objective(d);
    while b - a > LAMBDA_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    let lambda = 0.5 * (a + b);
    if lambda.is_finite() {
        lambda.clamp(LAMBDA_RANGE.0, LAMBDA_RANGE.1)
    } else {
        1.0
    }
}

/// Empirical CDF position of `v` among sorted reference quantiles placed at
/// evenly spaced levels. Repeated references map to the middle of their level span.
fn quantile_cdf(references: &[f64], v: f64) -> f64 {
    let m = references.len();
    if v <= references[0] {
        return 0.0;
    }
    if v >= references[m - 1] {
        return 1.0;
    }
    let level = |k: usize| k as f64 / (m - 1) as f64;
    let lo = references.partition_point(|&r| r < v);
    let hi = references.partition_point(|&r| r <= v);
    if lo < hi {
        return 0.5 * (level(lo) + level(hi - 1));
    }
    // references[lo - 1] < v < references[lo]
    let (r0, r1) = (references[lo - 1], references[lo]);
    level(lo - 1) + (v - r0) / (r1 - r0) * (level(lo) - level(lo - 1))
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal parameters are valid")
}

impl FittedScaler {
    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                found: x.ncols(),
            });
        }
        let mut out = x.clone();
        let normal = standard_normal();
        out.axis_iter_mut(Axis(1))
            .into_par_iter()
            .zip(self.columns.par_iter())
            .for_each(|(mut col, fit)| {
                col.mapv_inplace(|v| self.apply_value(fit, v, &normal));
            });
        Ok(out)
    }

    fn apply_value(&self, fit: &ColumnFit, v: f64, normal: &Normal) -> f64 {
        match (fit, self.kind) {
            (ColumnFit::PassThrough, _) => v,
            (ColumnFit::MinMax { min, max }, ScalerKind::MinMax { low, high }) => {
                (v - min) / (max - min) * (high - low) + low
            }
            (ColumnFit::Standard { mean, std }, ScalerKind::Standard { with_mean, with_std }) => {
                let centered = if with_mean { v - mean } else { v };
                if with_std && *std > 0.0 {
                    centered / std
                } else {
                    centered
                }
            }
            (ColumnFit::Quantile { references }, ScalerKind::Quantile { output, .. }) => {
                let u = quantile_cdf(references, v);
                match output {
                    QuantileOutput::Uniform => u,
                    QuantileOutput::Normal => {
                        normal.inverse_cdf(u.clamp(QUANTILE_CLAMP, 1.0 - QUANTILE_CLAMP))
                    }
                }
            }
            (ColumnFit::Robust { median, iqr }, ScalerKind::Robust { .. }) => {
                let scale = if *iqr > 0.0 { *iqr } else { 1.0 };
                (v - median) / scale
            }
            (ColumnFit::Power { lambda }, ScalerKind::Power) => yeo_johnson(v, *lambda),
            _ => unreachable!("column statistics always match their scaler kind"),
        }
    }
}

/// Per-slot fitted scalers; slot `i` was fitted on the output of slots `0..i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSequence {
    pub sequence: ScalerSequence,
    pub columns: Option<Vec<usize>>,
    pub stages: Vec<FittedScaler>,
    pub n_features: usize,
    pub std_convention: String,
}

pub fn fit_sequence(seq: &ScalerSequence, x: &Array2<f64>) -> Result<FittedSequence> {
    fit_sequence_on(seq, x, None)
}

/// Chained fit restricted to `columns` (all columns when `None`).
pub fn fit_sequence_on(
    seq: &ScalerSequence,
    x: &Array2<f64>,
    columns: Option<&[usize]>,
) -> Result<FittedSequence> {
    let mut current = x.clone();
    let mut stages = Vec::new();
    for &kind in seq.slots() {
        if kind == ScalerKind::NoOp {
            continue;
        }
        let fitted = fit_scaler_on(kind, &current, columns)?;
        current = fitted.apply(&current)?;
        stages.push(fitted);
    }
    Ok(FittedSequence {
        sequence: seq.clone(),
        columns: columns.map(<[usize]>::to_vec),
        stages,
        n_features: x.ncols(),
        std_convention: "population".into(),
    })
}

impl FittedSequence {
    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        let mut current = x.clone();
        for stage in &self.stages {
            current = stage.apply(&current)?;
        }
        Ok(current)
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let x = Array2::from_shape_vec((1, row.len()), row.to_vec())
            .map_err(|e| Error::validation(e.to_string()))?;
        Ok(self.apply(&x)?.row(0).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn col(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn standard_centers_with_population_std() {
        let fitted = fit_scaler(
            ScalerKind::Standard {
                with_mean: true,
                with_std: true,
            },
            &col(&[1.0, 2.0, 3.0]),
        )
        .unwrap();
        let ColumnFit::Standard { mean, std } = fitted.columns[0] else {
            panic!()
        };
        assert_eq!(mean, 2.0);
        assert!((std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let out = fitted.apply(&col(&[1.0, 2.0, 3.0])).unwrap();
        assert!(out.sum().abs() < 1e-12);
    }

    #[test]
    fn minmax_maps_linearly() {
        let kind = ScalerKind::MinMax { low: 0.0, high: 1.0 };
        let fitted = fit_scaler(kind, &col(&[0.0, 5.0, 10.0])).unwrap();
        assert_eq!(fitted.columns[0], ColumnFit::MinMax { min: 0.0, max: 10.0 });
        let out = fitted.apply(&col(&[0.0, 5.0, 10.0])).unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn robust_uses_interpolated_quartiles() {
        // sorted [1,2,3,4,100]: q25 at position 1 -> 2, q75 at position 3 -> 4
        let kind = ScalerKind::Robust { q_low: 25.0, q_high: 75.0 };
        let fitted = fit_scaler(kind, &col(&[1.0, 2.0, 3.0, 4.0, 100.0])).unwrap();
        assert_eq!(fitted.columns[0], ColumnFit::Robust { median: 3.0, iqr: 2.0 });
        assert_eq!(fitted.apply(&col(&[4.0])).unwrap()[[0, 0]], 0.5);
    }

    #[test]
    fn yeo_johnson_identity_at_one() {
        for &x in &[-3.5, -1e-20, 0.0, 1e-20, 2.25, 1e9] {
            assert_eq!(yeo_johnson(x, 1.0), x);
        }
        let fitted = FittedScaler {
            kind: ScalerKind::Power,
            columns: vec![ColumnFit::Power { lambda: 1.0 }],
        };
        let x = col(&[-2.0, 0.5, 7.0]);
        assert_eq!(fitted.apply(&x).unwrap(), x);
    }

    #[test]
    fn yeo_johnson_branches() {
        assert!((yeo_johnson(1.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((yeo_johnson(-1.0, 2.0) + 2f64.ln()).abs() < 1e-15);
        assert!((yeo_johnson(3.0, 2.0) - 7.5).abs() < 1e-12);
        assert!((yeo_johnson(-3.0, 0.0) - (-7.5)).abs() < 1e-12);
    }

    #[test]
    fn constant_columns_pass_through() {
        let x = array![[3.0, 1.0], [3.0, 2.0], [3.0, 5.0]];
        for kind in [
            ScalerKind::MinMax { low: -1.0, high: 1.0 },
            ScalerKind::Standard { with_mean: true, with_std: true },
            ScalerKind::Quantile { n_quantiles: 10, output: QuantileOutput::Normal },
            ScalerKind::Robust { q_low: 25.0, q_high: 75.0 },
            ScalerKind::Power,
        ] {
            let fitted = fit_scaler(kind, &x).unwrap();
            assert_eq!(fitted.columns[0], ColumnFit::PassThrough);
            let out = fitted.apply(&x).unwrap();
            assert_eq!(out.column(0).to_vec(), vec![3.0; 3]);
        }
    }

    #[test]
    fn quantile_normal_output_is_finite() {
        let x = col(&[1.0, 2.0, 3.0, 4.0]);
        let fitted = fit_scaler(
            ScalerKind::Quantile {
                n_quantiles: 1000,
                output: QuantileOutput::Normal,
            },
            &x,
        )
        .unwrap();
        let out = fitted.apply(&col(&[-100.0, 1.0, 2.5, 4.0, 100.0])).unwrap();
        assert!(out.iter().all(|v| v.is_finite()));
        assert!(out[[0, 0]] < -5.0 && out[[4, 0]] > 5.0);
        assert!(out[[2, 0]].abs() < 1e-12);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(fit_scaler(ScalerKind::MinMax { low: 1.0, high: 1.0 }, &col(&[1.0, 2.0])).is_err());
        assert!(ScalerKind::Robust { q_low: 75.0, q_high: 25.0 }.validate().is_err());
        assert!(ScalerKind::Quantile { n_quantiles: 1, output: QuantileOutput::Uniform }
            .validate()
            .is_err());
        assert!(fit_scaler(ScalerKind::Power, &Array2::zeros((0, 2))).is_err());
    }

    #[test]
    fn sequence_rejects_duplicates() {
        let p = ScalerParams::default();
        assert!(ScalerSequence::from_codes(&[2, 0, 3, 1, 0], &p).is_ok());
        assert!(ScalerSequence::from_codes(&[2, 2, 0, 0, 0], &p).is_err());
        assert!(ScalerSequence::from_codes(&[1, 2, 3], &p).is_err());
        assert!(ScalerSequence::from_codes(&[6, 0, 0, 0, 0], &p).is_err());
    }

    #[test]
    fn apply_checks_dimensions() {
        let fitted = fit_sequence(&ScalerSequence::identity(), &array![[1.0, 2.0]]).unwrap();
        assert!(matches!(
            fitted.apply(&array![[1.0, 2.0, 3.0]]),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn restricted_columns_leave_others_alone() {
        let x = array![[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]];
        let seq = ScalerSequence::single(ScalerKind::MinMax { low: 0.0, high: 1.0 }).unwrap();
        let fitted = fit_sequence_on(&seq, &x, Some(&[1])).unwrap();
        let out = fitted.apply(&x).unwrap();
        assert_eq!(out.column(0), x.column(0));
        assert_eq!(out.column(1).to_vec(), vec![0.0, 0.5, 1.0]);
    }
}

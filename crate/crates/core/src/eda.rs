//! Correlation and multicollinearity diagnostics.

use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, ThinQr};
use crate::stats;

pub const DEFAULT_BOOTSTRAP: usize = 100;

/// Relative residual norm below which a column counts as an exact linear
/// combination of the others.
const COLLINEAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrMethod {
    Pearson,
    Spearman,
    Kendall,
    Chatterjee,
}

impl CorrMethod {
    pub const ALL: [CorrMethod; 4] = [
        CorrMethod::Pearson,
        CorrMethod::Spearman,
        CorrMethod::Kendall,
        CorrMethod::Chatterjee,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CorrMethod::Pearson => "pearson",
            CorrMethod::Spearman => "spearman",
            CorrMethod::Kendall => "kendall",
            CorrMethod::Chatterjee => "chatterjee",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        CorrMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown correlation method '{s}'")))
    }

    pub fn is_symmetric(&self) -> bool {
        *self != CorrMethod::Chatterjee
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::validation(format!(
            "correlation inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::validation("correlation needs at least 2 observations"));
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let mx = stats::mean(x);
    let my = stats::mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::validation("zero variance input to correlation"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&stats::average_ranks(x), &stats::average_ranks(y))
}

/// Kendall's tau-b in O(n log n) (Knight's merge-sort method).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |t: u64| t * t.saturating_sub(1) / 2;
    let n0 = pairs(n as u64);
    let (mut ties_x, mut ties_xy) = (0u64, 0u64);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        ties_x += pairs((j - i) as u64);
        let mut a = i;
        while a < j {
            let mut b = a + 1;
            while b < j && y[order[b]] == y[order[a]] {
                b += 1;
            }
            ties_xy += pairs((b - a) as u64);
            a = b;
        }
        i = j;
    }

    let mut ys: Vec<f64> = order.iter().map(|&k| y[k]).collect();
    let swaps = merge_count_inversions(&mut ys);
    let mut ties_y = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        ties_y += pairs((j - i) as u64);
        i = j;
    }

    let denom = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::validation("zero variance input to correlation"));
    }
    let numer = n0 as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    Ok((numer / denom).clamp(-1.0, 1.0))
}

/// Sorts in place and returns the number of strictly inverted pairs.
fn merge_count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count_inversions(&mut v[..mid]) + merge_count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            count += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    count
}

pub fn corr_coefficient(x: &[f64], y: &[f64], method: CorrMethod, seed: u64) -> Result<f64> {
    match method {
        CorrMethod::Pearson => pearson(x, y),
        CorrMethod::Spearman => spearman(x, y),
        CorrMethod::Kendall => kendall_tau_b(x, y),
        CorrMethod::Chatterjee => chatterjee_xi(x, y, seed),
    }
}

/// Chatterjee's rank correlation xi(x -> y).
///
/// Rows are ordered by `x`, ties in `x` broken by a seeded random permutation.
/// Constant `y` gives 0.
pub fn chatterjee_xi(x: &[f64], y: &[f64], seed: u64) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let mut tiebreak: Vec<usize> = (0..n).collect();
    tiebreak.shuffle(&mut stats::rng(seed));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(tiebreak[a].cmp(&tiebreak[b])));

    let sorted_y = stats::sorted_copy(y);
    // r = #{j : y_j <= y_i}, l = #{j : y_j >= y_i}
    let r: Vec<f64> = order
        .iter()
        .map(|&i| sorted_y.partition_point(|&v| v <= y[i]) as f64)
        .collect();
    let jumps: f64 = r.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let has_ties = sorted_y.windows(2).any(|w| w[0] == w[1]);
    let nf = n as f64;
    if !has_ties {
        return Ok(1.0 - 3.0 * jumps / (nf * nf - 1.0));
    }
    let denom: f64 = y
        .iter()
        .map(|&v| {
            let l = (n - sorted_y.partition_point(|&s| s < v)) as f64;
            l * (nf - l)
        })
        .sum::<f64>()
        * 2.0;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - nf * jumps / denom)
}

/// Pairwise coefficients over the dataset columns. For Chatterjee's xi the cell
/// `(i, j)` is xi(column i -> column j); the diagonal is 1 by convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub method: CorrMethod,
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn correlation_matrix(ds: &Dataset, method: CorrMethod, seed: u64) -> Result<CorrelationMatrix> {
    let p = ds.n_features();
    if p < 2 {
        return Err(Error::validation("correlation matrix needs at least 2 columns"));
    }
    let columns: Vec<Vec<f64>> = (0..p).map(|j| ds.column(j)).collect();
    let cells: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && (!method.is_symmetric() || i < j))
        .collect();
    let computed = cells
        .par_iter()
        .map(|&(i, j)| {
            let seed = stats::derive_seed(seed, i as u64, j as u64);
            corr_coefficient(&columns[i], &columns[j], method, seed)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut values = vec![vec![0.0; p]; p];
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (&(i, j), &v) in cells.iter().zip(&computed) {
        values[i][j] = v;
        if method.is_symmetric() {
            values[j][i] = v;
        }
    }
    Ok(CorrelationMatrix {
        method,
        names: ds.feature_names().to_vec(),
        values,
    })
}

impl CorrelationMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == row)?;
        let j = self.names.iter().position(|n| n == col)?;
        Some(self.values[i][j])
    }

    /// Header row of names, then one row per feature (row = first argument).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for name in &self.names {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.values) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifRow {
    pub feature: String,
    /// Infinite (serialized as null) when the column is an exact linear
    /// combination of the others.
    pub vif: f64,
    pub collinear: bool,
    pub standard_error: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifTable {
    pub rows: Vec<VifRow>,
    pub bootstrap_replicates: usize,
    pub ci_level: f64,
    pub ci_method: String,
    pub seed: u64,
}

impl VifTable {
    pub fn get(&self, feature: &str) -> Option<&VifRow> {
        self.rows.iter().find(|r| r.feature == feature)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("Feature,VIF,Standard_Error,CI_Lower,CI_Upper\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.feature, r.vif, r.standard_error, r.ci_lower, r.ci_upper
            );
        }
        out
    }
}

fn centered_columns(x: &Array2<f64>, rows: Option<&[usize]>) -> Vec<Vec<f64>> {
    (0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            let mut v: Vec<f64> = match rows {
                Some(rows) => rows.iter().map(|&i| col[i]).collect(),
                None => col.to_vec(),
            };
            let m = stats::mean(&v);
            v.iter_mut().for_each(|e| *e -= m);
            v
        })
        .collect()
}

/// Variance inflation factors, `1 / (1 - R_i^2)` with `R_i^2` from regressing
/// column `i` on all other columns plus an intercept. `None` marks columns that are
/// exact linear combinations of others (or constant).
///
/// A single QR factorization of the centered design gives every `R_i^2`:
/// `VIF_i = ||x_i||^2 * ||row_i(R^-1)||^2`.
pub fn vif_values(x: &Array2<f64>) -> Vec<Option<f64>> {
    vif_from_columns(&centered_columns(x, None))
}

fn vif_from_columns(columns: &[Vec<f64>]) -> Vec<Option<f64>> {
    let p = columns.len();
    let qr = ThinQr::decompose(columns, COLLINEAR_TOL);
    let r = qr.r_independent();
    let r_inv = linalg::invert_upper(&r);

    let mut infinite = vec![false; p];
    for &d in &qr.dependent {
        infinite[d] = true;
        if qr.column_norms[d] == 0.0 {
            continue;
        }
        // coefficients of column d on the independent columns: R^-1 c
        let c = &qr.coefficients[d];
        for (pos, &b) in qr.independent.iter().enumerate() {
            let a: f64 = (0..c.len()).map(|k| r_inv[pos][k] * c[k]).sum();
            if (a * qr.column_norms[b]).abs() > 1e-8 * qr.column_norms[d] {
                infinite[b] = true;
            }
        }
    }
    let mut out = vec![None; p];
    for (pos, &j) in qr.independent.iter().enumerate() {
        if infinite[j] {
            continue;
        }
        let row_norm2: f64 = r_inv[pos].iter().map(|v| v * v).sum();
        let vif = qr.column_norms[j].powi(2) * row_norm2;
        out[j] = Some(vif.max(1.0));
    }
    out
}

/// VIF per feature with bootstrap standard errors and 95% percentile intervals
/// from `bootstrap_b` row-resampled replicates. The interval is widened if needed
/// so it always contains the point estimate.
pub fn vif_table(ds: &Dataset, bootstrap_b: usize, seed: u64) -> Result<VifTable> {
    let p = ds.n_features();
    let n = ds.n_rows();
    if p < 2 {
        return Err(Error::validation("VIF needs at least 2 columns"));
    }
    if n <= p {
        return Err(Error::validation(format!(
            "VIF needs more rows than columns ({n} rows, {p} columns)"
        )));
    }
    let point = vif_values(ds.x());
    let replicates: Vec<Vec<Option<f64>>> = (0..bootstrap_b)
        .into_par_iter()
        .map(|b| {
            let mut rng = stats::rng(stats::derive_seed(seed, 0x5649_46, b as u64));
            let rows: Vec<usize> = (0..n)
                .map(|_| rand::Rng::random_range(&mut rng, 0..n))
                .collect();
            vif_from_columns(&centered_columns(ds.x(), Some(&rows)))
        })
        .collect();

    let rows = (0..p)
        .map(|j| {
            let feature = ds.feature_names()[j].clone();
            match point[j] {
                None => VifRow {
                    feature,
                    vif: f64::INFINITY,
                    collinear: true,
                    standard_error: f64::NAN,
                    ci_lower: f64::INFINITY,
                    ci_upper: f64::INFINITY,
                },
                Some(vif) => {
                    let mut draws: Vec<f64> = replicates.iter().filter_map(|r| r[j]).collect();
                    draws.sort_by(f64::total_cmp);
                    let (se, lo, hi) = if draws.len() < 2 {
                        (0.0, vif, vif)
                    } else {
                        let m = stats::mean(&draws);
                        let var = draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>()
                            / (draws.len() - 1) as f64;
                        (
                            var.sqrt(),
                            stats::percentile_sorted(&draws, 0.025),
                            stats::percentile_sorted(&draws, 0.975),
                        )
                    };
                    VifRow {
                        feature,
                        vif,
                        collinear: false,
                        standard_error: se,
                        ci_lower: lo.min(vif),
                        ci_upper: hi.max(vif),
                    }
                }
            }
        })
        .collect();
    Ok(VifTable {
        rows,
        bootstrap_replicates: bootstrap_b,
        ci_level: 0.95,
        ci_method: "bootstrap percentile over row-resampled replicates".into(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pearson_linear() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!(pearson(&x, &[2.0; 5]).is_err());
    }

    #[test]
    fn rank_methods_on_monotone_map() {
        let x = [-2.0, -1.0, 0.5, 1.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&x, &y).unwrap(), 1.0);
    }

    #[test]
    fn kendall_hand_case() {
        let tau = kendall_tau_b(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((tau - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn chatterjee_monotone_and_constant() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [10.0, 20.0, 30.0, 40.0, 50.0];
        assert_eq!(chatterjee_xi(&x, &y, 0).unwrap(), 0.5);
        assert_eq!(chatterjee_xi(&x, &[7.0; 5], 0).unwrap(), 0.0);
        assert!(chatterjee_xi(&[1.0], &[1.0], 0).is_err());
    }

    #[test]
    fn chatterjee_tie_form_agrees_without_ties() {
        // Without ties both closed forms coincide; compare against the tie form directly.
        let x = [0.3, 0.1, 0.9, 0.5, 0.7, 0.2];
        let y = [1.0, 4.0, 2.0, 6.0, 3.0, 5.0];
        let xi = chatterjee_xi(&x, &y, 3).unwrap();
        let n = 6.0;
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let r: Vec<f64> = order
            .iter()
            .map(|&i| y.iter().filter(|&&v| v <= y[i]).count() as f64)
            .collect();
        let l: Vec<f64> = y
            .iter()
            .map(|&yi| y.iter().filter(|&&v| v >= yi).count() as f64)
            .collect();
        let jumps: f64 = r.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        let denom: f64 = 2.0 * l.iter().map(|li| li * (n - li)).sum::<f64>();
        assert!((xi - (1.0 - n * jumps / denom)).abs() < 1e-12);
    }

    #[test]
    fn identical_columns_correlate_fully() {
        let ds = Dataset::from_parts(
            array![[1.0, 1.0, 0.3], [2.0, 2.0, 0.1], [4.0, 4.0, 0.7], [3.0, 3.0, 0.2]],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let m = correlation_matrix(&ds, CorrMethod::Pearson, 0).unwrap();
        assert!((m.values[0][1] - 1.0).abs() < 1e-15);
        assert_eq!(m.values[0][2], m.values[2][0]);
        let csv = m.to_csv();
        assert!(csv.starts_with("feature,x0,x1,x2\n"));
    }

    #[test]
    fn vif_flags_exact_collinearity() {
        // x2 = x0 + x1; x3 unrelated
        let x = array![
            [1.0, 0.5, 1.5, 3.0],
            [2.0, 0.1, 2.1, -1.0],
            [0.0, 1.2, 1.2, 0.4],
            [3.0, 0.7, 3.7, 2.2],
            [1.5, 2.0, 3.5, 0.9],
            [2.5, 1.1, 3.6, -0.3]
        ];
        let v = vif_values(&x);
        assert_eq!(&v[..3], &[None, None, None]);
        assert!(v[3].unwrap() >= 1.0);
    }

    #[test]
    fn vif_of_constructed_r2() {
        // Column 0 = column 1 + orthogonal noise with R^2 = 0.9 by construction.
        let a = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let s = (1.0f64 / 9.0).sqrt();
        let x = Array2::from_shape_fn((8, 2), |(i, j)| if j == 0 { a[i] + s * b[i] } else { a[i] });
        let v = vif_values(&x);
        assert!((v[0].unwrap() - 10.0).abs() < 1e-9, "{v:?}");
        assert!((v[1].unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn vif_table_intervals_contain_estimate() {
        let mut rng = stats::rng(5);
        let n = 200;
        let x = Array2::from_shape_fn((n, 3), |_| rand::Rng::random::<f64>(&mut rng));
        let ds = Dataset::from_parts(x, vec![0; n]).unwrap();
        let t = vif_table(&ds, 30, 9).unwrap();
        for r in &t.rows {
            assert!(r.ci_lower <= r.vif && r.vif <= r.ci_upper);
            assert!(r.standard_error >= 0.0);
        }
        assert!(t.to_csv().starts_with("Feature,VIF,Standard_Error,CI_Lower,CI_Upper\n"));
        assert_eq!(vif_table(&ds, 30, 9).unwrap(), t);
    }
}

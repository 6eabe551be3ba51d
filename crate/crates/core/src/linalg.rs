//! Dense helpers for the small systems that show up in VIF and logistic regression.

/// Column-pivot-free Gram-Schmidt QR with one reorthogonalization pass.
///
/// Columns whose residual after projection falls below `rel_tol` of their own norm
/// are treated as linearly dependent and left out of the basis; their coefficients
/// on the basis are kept so callers can tell which columns they depend on.
pub struct ThinQr {
    /// Orthonormal basis vectors, one per independent column.
    #[cfg_attr(not(test), allow(dead_code))]
    pub basis: Vec<Vec<f64>>,
    /// For every input column, its coefficients on the basis (length = basis size
    /// at the end of the decomposition, zero-padded).
    pub coefficients: Vec<Vec<f64>>,
    /// Input column index behind each basis vector.
    pub independent: Vec<usize>,
    /// Input columns that were absorbed as dependent.
    pub dependent: Vec<usize>,
    pub column_norms: Vec<f64>,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ThinQr {
    pub fn decompose(columns: &[Vec<f64>], rel_tol: f64) -> ThinQr {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut coefficients = Vec::with_capacity(columns.len());
        let mut independent = Vec::new();
        let mut dependent = Vec::new();
        let mut column_norms = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter().enumerate() {
            let norm0 = dot(col, col).sqrt();
            column_norms.push(norm0);
            let mut v = col.clone();
            let mut coef = vec![0.0; basis.len()];
            for _ in 0..2 {
                for (k, q) in basis.iter().enumerate() {
                    let c = dot(q, &v);
                    coef[k] += c;
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm0 == 0.0 || norm <= rel_tol * norm0 {
                dependent.push(j);
            } else {
                for vi in v.iter_mut() {
                    *vi /= norm;
                }
                coef.push(norm);
                basis.push(v);
                independent.push(j);
            }
            coefficients.push(coef);
        }
        let r = basis.len();
        for c in coefficients.iter_mut() {
            c.resize(r, 0.0);
        }
        ThinQr {
            basis,
            coefficients,
            independent,
            dependent,
            column_norms,
        }
    }

    /// Upper-triangular R restricted to the independent columns.
    pub fn r_independent(&self) -> Vec<Vec<f64>> {
        let r = self.independent.len();
        let mut out = vec![vec![0.0; r]; r];
        for (col_pos, &j) in self.independent.iter().enumerate() {
            for row in 0..r {
                out[row][col_pos] = self.coefficients[j][row];
            }
        }
        out
    }
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn invert_upper(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = r.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        for row in (0..=col).rev() {
            let mut s = if row == col { 1.0 } else { 0.0 };
            for k in row + 1..=col {
                s -= r[row][k] * inv[k][col];
            }
            inv[row][col] = s / r[row][row];
        }
    }
    inv
}

/// Solves `a x = b` for symmetric positive-definite `a` via Cholesky.
/// Returns `None` when `a` is not numerically positive definite.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_reconstructs_columns() {
        let cols = vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 5.0], vec![2.0, 5.0, 11.0]];
        let qr = ThinQr::decompose(&cols, 1e-9);
        // third column = 2*first + second
        assert_eq!(qr.independent, vec![0, 1]);
        assert_eq!(qr.dependent, vec![2]);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..3 {
                let rebuilt: f64 = qr.basis.iter().zip(&qr.coefficients[j]).map(|(q, c)| q[i] * c).sum();
                assert!((rebuilt - col[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn upper_inverse() {
        let r = vec![vec![2.0, 1.0], vec![0.0, 4.0]];
        let inv = invert_upper(&r);
        assert_eq!(inv, vec![vec![0.5, -0.125], vec![0.0, 0.25]]);
    }

    #[test]
    fn cholesky_solves_spd() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-12);
        assert!(cholesky_solve(&[vec![0.0]], &[1.0]).is_none());
    }
}

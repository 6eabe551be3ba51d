use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, dot};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// Ridge strength on the weights (inverse of `C`); the bias is not penalized.
    pub l2: f64,
    /// Weights for (negative, positive) rows.
    pub class_weight: (f64, f64),
    /// Convergence threshold on the max-norm of the normalized gradient.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1.0,
            class_weight: (1.0, 10.0),
            tol: 1e-6,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
    pub class_weights: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the normalized gradient at the returned parameters.
    pub gradient_norm: f64,
}

impl LinearModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.bias + dot(&self.weights, row)
    }

    pub fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|r| stats::sigmoid(self.decision(&r.to_vec())))
            .collect())
    }
}

struct Problem {
    rows: Vec<Vec<f64>>,
    y: Vec<f64>,
    c: Vec<f64>,
    l2: f64,
    total_weight: f64,
}

impl Problem {
    fn new(ds: &Dataset, l2: f64, cw: (f64, f64)) -> Self {
        let c: Vec<f64> = ds.y().iter().map(|&v| if v == 1 { cw.1 } else { cw.0 }).collect();
        Problem {
            rows: (0..ds.n_rows()).map(|i| ds.row(i)).collect(),
            y: ds.y().iter().map(|&v| f64::from(v)).collect(),
            total_weight: c.iter().sum(),
            c,
            l2,
        }
    }

    /// Parameters are laid out as `[w_0, …, w_{p-1}, bias]`.
    fn objective(&self, theta: &[f64]) -> f64 {
        let p = theta.len() - 1;
        let mut f = 0.0;
        for ((row, &y), &c) in self.rows.iter().zip(&self.y).zip(&self.c) {
            let z = theta[p] + dot(&theta[..p], row);
            f += c * stats::log_loss_logit(y, z);
        }
        f + 0.5 * self.l2 * theta[..p].iter().map(|w| w * w).sum::<f64>()
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let p = theta.len() - 1;
        let mut g = vec![0.0; p + 1];
        for ((row, &y), &c) in self.rows.iter().zip(&self.y).zip(&self.c) {
            let z = theta[p] + dot(&theta[..p], row);
            let r = c * (stats::sigmoid(z) - y);
            for (gj, &xj) in g.iter_mut().zip(row) {
                *gj += r * xj;
            }
            g[p] += r;
        }
        for j in 0..p {
            g[j] += self.l2 * theta[j];
        }
        g
    }

    fn hessian(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        let d = theta.len();
        let p = d - 1;
        let mut h = vec![vec![0.0; d]; d];
        let mut ext = vec![1.0; d];
        for (row, &c) in self.rows.iter().zip(&self.c) {
            let z = theta[p] + dot(&theta[..p], row);
            let s = stats::sigmoid(z);
            let v = c * s * (1.0 - s);
            ext[..p].copy_from_slice(row);
            for a in 0..d {
                let va = v * ext[a];
                for b in 0..=a {
                    h[a][b] += va * ext[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                h[b][a] = h[a][b];
            }
        }
        for (j, hj) in h.iter_mut().enumerate().take(p) {
            hj[j] += self.l2;
        }
        h
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Class-weighted L2 logistic regression by damped Newton steps with a
/// backtracking (Armijo) line search.
///
/// The objective is `sum_i c_i loss_i + l2/2 ||w||^2`. Convergence is declared
/// when the max-norm of its gradient divided by `sum_i c_i` drops below `tol`.
pub fn train_logreg(ds: &Dataset, cfg: &LogRegConfig) -> Result<LinearModel> {
    ds.require_both_classes()?;
    if !(cfg.l2 >= 0.0 && cfg.l2.is_finite()) {
        return Err(Error::validation(format!("l2 must be finite and >= 0, got {}", cfg.l2)));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::validation(format!("tol must be > 0, got {}", cfg.tol)));
    }
    let (w0, w1) = cfg.class_weight;
    if !(w0 > 0.0 && w1 > 0.0) {
        return Err(Error::validation(format!("class weights must be positive, got ({w0}, {w1})")));
    }
    let prob = Problem::new(ds, cfg.l2, cfg.class_weight);
    let p = ds.n_features();
    let mut theta = vec![0.0; p + 1];
    let mut f = prob.objective(&theta);
    let mut g = prob.gradient(&theta);
    let mut iterations = 0;
    let mut converged = max_abs(&g) / prob.total_weight < cfg.tol;

    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        let h = prob.hessian(&theta);
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let direction = newton_direction(h, &neg_g);
        let slope = dot(&g, &direction);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&direction).map(|(a, d)| a + t * d).collect();
            let fc = prob.objective(&cand);
            if fc <= f + 1e-4 * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            log::warn!("logistic regression line search stalled after {iterations} iterations");
            break;
        };
        theta = cand;
        f = fc;
        g = prob.gradient(&theta);
        converged = max_abs(&g) / prob.total_weight < cfg.tol;
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("logistic regression diverged".into()));
    }
    if !converged {
        log::warn!("logistic regression did not converge in {} iterations", cfg.max_iter);
    }
    Ok(LinearModel {
        bias: theta[p],
        weights: theta[..p].to_vec(),
        l2: cfg.l2,
        class_weights: cfg.class_weight,
        iterations,
        converged,
        gradient_norm: max_abs(&g) / prob.total_weight,
    })
}

/// Solves `H d = -g`, adding a growing ridge if `H` is numerically singular, and
/// falling back to steepest descent.
fn newton_direction(h: Vec<Vec<f64>>, neg_g: &[f64]) -> Vec<f64> {
    let scale = (0..h.len()).map(|i| h[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut m = h.clone();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += ridge;
        }
        if let Some(d) = cholesky_solve(&m, neg_g) {
            if d.iter().all(|v| v.is_finite()) {
                return d;
            }
        }
        ridge = if ridge == 0.0 { scale * 1e-10 } else { ridge * 100.0 };
    }
    neg_g.to_vec()
}

/// Gradient of the training objective divided by the total class weight; its
/// max-norm is what [`train_logreg`] compares against `tol`.
pub fn normalized_gradient(ds: &Dataset, model: &LinearModel) -> Vec<f64> {
    let prob = Problem::new(ds, model.l2, model.class_weights);
    let mut theta = model.weights.clone();
    theta.push(model.bias);
    prob.gradient(&theta)
        .into_iter()
        .map(|v| v / prob.total_weight)
        .collect()
}

//! Synthetic dataset generators used by tests, examples and benchmarks.
//!
//! Every generator is a pure function of its arguments and seed.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats;

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

/// Gaussian blobs with `n_neg` negatives at the origin and `n_pos` positives
/// shifted by `separation` along the first `informative` axes. Rows are shuffled.
pub fn imbalanced_blobs(
    n_neg: usize,
    n_pos: usize,
    p: usize,
    informative: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if informative > p {
        return Err(Error::validation(format!(
            "informative ({informative}) exceeds feature count ({p})"
        )));
    }
    let mut rng = stats::rng(seed);
    let n = n_neg + n_pos;
    let mut labels: Vec<u8> = std::iter::repeat_n(0, n_neg)
        .chain(std::iter::repeat_n(1, n_pos))
        .collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    let mut x = Array2::<f64>::zeros((n, p));
    for (i, &label) in labels.iter().enumerate() {
        for j in 0..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            let shift = if label == 1 && j < informative { separation } else { 0.0 };
            x[[i, j]] = z + shift;
        }
    }
    Dataset::new(names(p), x, labels)
}

/// Two uniform features on [-1, 1] with `y = (x0 > 0) xor (x1 > 0)`, plus
/// `noise_features` uniform distractors. Classes are balanced in expectation.
pub fn xor(n: usize, noise_features: usize, seed: u64) -> Result<Dataset> {
    let mut rng = stats::rng(seed);
    let p = 2 + noise_features;
    let mut x = Array2::<f64>::zeros((n, p));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..p {
            x[[i, j]] = rng.random_range(-1.0..1.0);
        }
        y.push(u8::from((x[[i, 0]] > 0.0) != (x[[i, 1]] > 0.0)));
    }
    Dataset::new(names(p), x, y)
}

/// Standard-normal features where only the first `informative` enter a
/// monotone logit `intercept + strength * sum x_j`; the rest are noise.
pub fn monotone_informative(
    n: usize,
    informative: usize,
    noise_features: usize,
    strength: f64,
    intercept: f64,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = stats::rng(seed);
    let p = informative + noise_features;
    let mut x = Array2::<f64>::zeros((n, p));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut logit = intercept;
        for j in 0..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[[i, j]] = z;
            if j < informative {
                logit += strength * z;
            }
        }
        y.push(u8::from(rng.random::<f64>() < stats::sigmoid(logit)));
    }
    Dataset::new(names(p), x, y)
}

/// Non-linear additive logit `2 sin(2 x0) + 1.5 (x1^2 - 1/3) - x2` on uniform
/// [-1.5, 1.5] features, plus `noise_features` distractors.
pub fn additive(n: usize, noise_features: usize, seed: u64) -> Result<Dataset> {
    let mut rng = stats::rng(seed);
    let p = 3 + noise_features;
    let mut x = Array2::<f64>::zeros((n, p));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..p {
            x[[i, j]] = rng.random_range(-1.5..1.5);
        }
        let logit = 2.0 * (2.0 * x[[i, 0]]).sin() + 1.5 * (x[[i, 1]].powi(2) - 1.0 / 3.0) - x[[i, 2]];
        y.push(u8::from(rng.random::<f64>() < stats::sigmoid(logit)));
    }
    Dataset::new(names(p), x, y)
}

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats;

/// Ascending cut points for one feature. Bin `k` is `[cut[k-1], cut[k])`; values
/// below the first cut land in bin 0 and values at or above the last cut land in
/// the last bin, so unseen values clamp to the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    pub cuts: Vec<f64>,
}

impl FeatureBins {
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    #[inline]
    pub fn bin(&self, value: f64) -> usize {
        self.cuts.partition_point(|&c| c <= value)
    }

    pub fn bin_all(&self, values: &[f64]) -> Vec<u32> {
        values.iter().map(|&v| self.bin(v) as u32).collect()
    }

    /// Human-readable interval for bin `k`.
    pub fn describe(&self, k: usize) -> String {
        let lo = if k == 0 {
            "-inf".to_string()
        } else {
            format!("{}", self.cuts[k - 1])
        };
        let hi = if k == self.cuts.len() {
            "+inf".to_string()
        } else {
            format!("{}", self.cuts[k])
        };
        format!("[{lo}, {hi})")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinDefinition {
    pub features: Vec<FeatureBins>,
}

/// Quantile binning per column; see [`build_feature_bins`].
pub fn build_bins(x: &Array2<f64>, max_bins: usize, min_samples_bin: usize) -> BinDefinition {
    let features = (0..x.ncols())
        .into_par_iter()
        .map(|j| build_feature_bins(&x.column(j).to_vec(), max_bins, min_samples_bin))
        .collect();
    BinDefinition { features }
}

/// Cuts at the evenly spaced probability levels `k / max_bins` (linear
/// interpolation between order statistics), deduplicated. Bins holding fewer than
/// `min_samples_bin` rows are merged into a neighbour: the right one when it
/// exists, otherwise the left.
pub fn build_feature_bins(values: &[f64], max_bins: usize, min_samples_bin: usize) -> FeatureBins {
    let sorted = stats::sorted_copy(values);
    if sorted.len() < 2 || max_bins < 2 || sorted[0] == sorted[sorted.len() - 1] {
        return FeatureBins { cuts: Vec::new() };
    }
    let mut cuts: Vec<f64> = (1..max_bins)
        .map(|k| stats::percentile_sorted(&sorted, k as f64 / max_bins as f64))
        .collect();
    cuts.dedup();

    let min_count = min_samples_bin.max(1);
    loop {
        let counts = bin_counts(&sorted, &cuts);
        let Some(small) = counts.iter().position(|&c| c < min_count) else {
            break;
        };
        if cuts.is_empty() {
            break;
        }
        if small < cuts.len() {
            cuts.remove(small);
        } else {
            cuts.remove(small - 1);
        }
    }
    FeatureBins { cuts }
}

fn bin_counts(sorted: &[f64], cuts: &[f64]) -> Vec<usize> {
    let mut counts = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for &c in cuts {
        let end = sorted.partition_point(|&v| v < c);
        counts.push(end - start);
        start = end;
    }
    counts.push(sorted.len() - start);
    counts
}

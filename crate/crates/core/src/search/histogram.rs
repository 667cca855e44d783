use serde::{Deserialize, Serialize};

use super::SearchError;

pub const DEFAULT_BIN_COUNT: usize = 20;

/// Equal-width histogram of log-probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub total: usize,
}

impl Histogram {
    /// Bins `values` into `bin_count` equal-width bins spanning their
    /// minimum and maximum. Bins are left-closed; the last bin also includes
    /// the maximum. A zero-width span is widened by 0.5 on each side.
    pub fn of(values: &[f64], bin_count: usize) -> Result<Self, SearchError> {
        if values.is_empty() {
            return Err(SearchError::EmptyInput);
        }
        if bin_count == 0 {
            return Err(SearchError::InvalidParams("bin count must be at least 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SearchError::InvalidParams("histogram values must be finite".into()));
        }
        let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bin_count as f64;
        let mut bin_edges: Vec<f64> = (0..bin_count).map(|i| lo + width * i as f64).collect();
        bin_edges.push(hi);
        // Rounding can make interior edges collide on tiny spans; keep them
        // strictly ascending.
        for i in 1..bin_edges.len() {
            if bin_edges[i] <= bin_edges[i - 1] {
                bin_edges[i] = next_up(bin_edges[i - 1]);
            }
        }
        let interior = &bin_edges[1..bin_count];
        let mut counts = vec![0usize; bin_count];
        for &v in values {
            counts[interior.partition_point(|&e| e <= v)] += 1;
        }
        Ok(Self {
            bin_edges,
            counts,
            total: values.len(),
        })
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

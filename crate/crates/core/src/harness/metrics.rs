use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::estimators::Method;

/// Maximal runs of grid cells above a fraction of the peak value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub intervals: Vec<Range<usize>>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.intervals.len()
    }
}

/// Runs of consecutive cells with `gamma_g > frac * max(gamma)`. The grid is
/// treated as a line; an all-zero input has no components.
pub fn connected_components(gamma: &[f64], frac: f64) -> Components {
    let peak = gamma.iter().copied().fold(0.0, f64::max);
    let mut intervals = Vec::new();
    if peak <= 0.0 {
        return Components { intervals };
    }
    let threshold = frac * peak;
    let mut start = None;
    for (g, &v) in gamma.iter().enumerate() {
        match (v > threshold, start) {
            (true, None) => start = Some(g),
            (false, Some(s)) => {
                intervals.push(s..g);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        intervals.push(s..gamma.len());
    }
    Components { intervals }
}

/// Threshold (relative to the peak) defining support and groups.
pub const SUPPORT_FRACTION: f64 = 0.01;

fn unit_sum(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 { v.iter().map(|x| x / total).collect() } else { v.to_vec() }
}

fn support(v: &[f64], frac: f64) -> Vec<bool> {
    let peak = v.iter().copied().fold(0.0, f64::max);
    v.iter().map(|&x| peak > 0.0 && x > frac * peak).collect()
}

/// Error metrics of an estimate against the grid-sampled truth, both taken
/// to unit sum first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub l1_error: f64,
    pub l2_error: f64,
    pub support_jaccard: f64,
    pub group_count: usize,
    /// Estimate mass on cells where the truth is zero.
    pub oob_power: f64,
}

pub fn score(estimate: &[f64], truth: &[f64]) -> Scores {
    assert_eq!(estimate.len(), truth.len(), "estimate and truth lengths differ");
    let est = unit_sum(estimate);
    let tru = unit_sum(truth);
    let diff = est.iter().zip(&tru).map(|(a, b)| a - b);
    let l1_error = diff.clone().map(f64::abs).sum();
    let l2_error = diff.map(|d| d * d).sum::<f64>().sqrt();
    let se = support(&est, SUPPORT_FRACTION);
    let st = support(&tru, SUPPORT_FRACTION);
    let inter = se.iter().zip(&st).filter(|(a, b)| **a && **b).count();
    let union = se.iter().zip(&st).filter(|(a, b)| **a || **b).count();
    let support_jaccard = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    let oob_power = est.iter().zip(&tru).filter(|(_, t)| **t <= 0.0).map(|(e, _)| e).sum();
    Scores {
        l1_error,
        l2_error,
        support_jaccard,
        group_count: connected_components(&est, SUPPORT_FRACTION).count(),
        oob_power,
    }
}

/// One line of `metrics.csv`. Failed runs keep `scores = None` and the error
/// text in `status`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: Method,
    pub seed: u64,
    pub t_over_m: usize,
    pub clusters: usize,
    pub scores: Option<Scores>,
    pub varsigma_prime: Option<f64>,
    pub status: String,
}

pub const METRICS_HEADER: &str =
    "method,seed,T_over_M,K,l1_error,l2_error,support_jaccard,group_count,oob_power,varsigma_prime,status";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        let s = self.scores.as_ref();
        // status text may carry commas; keep the column count fixed
        let status = self.status.replace([',', '\n'], ";");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.seed,
            self.t_over_m,
            self.clusters,
            opt(s.map(|s| s.l1_error)),
            opt(s.map(|s| s.l2_error)),
            opt(s.map(|s| s.support_jaccard)),
            opt(s.map(|s| s.group_count)),
            opt(s.map(|s| s.oob_power)),
            opt(self.varsigma_prime),
            status
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_examples() {
        assert_eq!(connected_components(&[2.0, 0.0, 2.0, 0.0], 0.01).count(), 2);
        assert_eq!(connected_components(&[1.0; 4], 0.01).count(), 1);
        assert_eq!(connected_components(&[0.0; 4], 0.01).count(), 0);
        let c = connected_components(&[0.0, 1.0, 1.0, 0.0, 0.5, 0.001], 0.01);
        assert_eq!(c.intervals, vec![1..3, 4..5]);
        assert_eq!(connected_components(&[1.0, 0.0, 1.0], 0.01).intervals, vec![0..1, 2..3]);
    }

    #[test]
    fn perfect_estimate() {
        let t = [0.0, 0.5, 0.5, 0.0];
        let s = score(&[0.0, 2.0, 2.0, 0.0], &t);
        assert_eq!(s.l1_error, 0.0);
        assert_eq!(s.support_jaccard, 1.0);
        assert_eq!(s.group_count, 1);
        assert_eq!(s.oob_power, 0.0);
    }

    #[test]
    fn disjoint_estimate() {
        let s = score(&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0]);
        assert!((s.l1_error - 2.0).abs() < 1e-15);
        assert!((s.l2_error - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.support_jaccard, 0.0);
        assert_eq!(s.oob_power, 1.0);
    }

    #[test]
    fn csv_line_layout() {
        let row = MetricsRow {
            method: Method::Nnls,
            seed: 3,
            t_over_m: 8,
            clusters: 2,
            scores: None,
            varsigma_prime: None,
            status: "failed: a, b".into(),
        };
        let line = row.to_csv_line();
        assert_eq!(line.split(',').count(), METRICS_HEADER.split(',').count());
        assert!(line.starts_with("nnls,3,8,2,"));
    }
}

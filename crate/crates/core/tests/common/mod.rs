//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use asf_core::model::{Cluster, GroupSparseAsf};
use asf_core::C64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Hermitian Toeplitz matrix `S[i, k] = sigma_{i-k}`, `sigma_{-r} = conj(sigma_r)`.
pub fn toeplitz(sigma: &[C64]) -> DMatrix<C64> {
    let m = sigma.len();
    DMatrix::from_fn(m, m, |i, k| if i >= k { sigma[i - k] } else { sigma[k - i].conj() })
}

/// Composite Simpson rule for `int_a^b e^{j pi r xi} dxi`, `r = 0..m`.
pub fn moment_quadrature(a: f64, b: f64, m: usize, intervals: usize) -> Vec<C64> {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut acc = vec![C64::new(0.0, 0.0); m];
    for i in 0..=intervals {
        let xi = a + i as f64 * h;
        let w = if i == 0 || i == intervals { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let step = C64::from_polar(1.0, PI * xi);
        let mut phase = C64::new(1.0, 0.0);
        for v in acc.iter_mut() {
            *v += phase * w;
            phase *= step;
        }
    }
    acc.iter().map(|v| v * (h / 3.0)).collect()
}

/// Exhaustive support enumeration for `min_{x >= 0} ||Ax - b||^2`: the
/// optimum is the unconstrained least-squares solution on some support,
/// so the best nonnegative one over all supports is optimal.
pub fn nnls_by_enumeration(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = a.ncols();
    assert!(n <= 12, "enumeration is exponential");
    let mut best = (DVector::zeros(n), b.norm_squared());
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let sub = DMatrix::from_fn(a.nrows(), cols.len(), |i, k| a[(i, cols[k])]);
        let sol = sub.clone().svd(true, true).solve(b, 1e-13).expect("svd solve");
        if sol.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut x = DVector::zeros(n);
        for (k, &j) in cols.iter().enumerate() {
            x[j] = sol[k];
        }
        let obj = (a * &x - b).norm_squared();
        if obj < best.1 {
            best = (x, obj);
        }
    }
    best
}

/// Random group-sparse ASF built from positive gaps, so clusters are
/// always disjoint.
pub fn asf_strategy(max_clusters: usize) -> impl Strategy<Value = GroupSparseAsf> {
    (1..=max_clusters)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(0.05f64..1.0, 2 * k + 1),
                prop::collection::vec(0.1f64..1.0, k),
            )
        })
        .prop_map(|(gaps, masses)| {
            let total: f64 = gaps.iter().sum();
            let mut edges = Vec::with_capacity(gaps.len());
            let mut pos = -1.0;
            for g in &gaps[..gaps.len() - 1] {
                pos += 2.0 * g / total;
                edges.push(pos);
            }
            let mass_total: f64 = masses.iter().sum();
            let clusters = masses
                .iter()
                .enumerate()
                .map(|(i, m)| Cluster::flat(edges[2 * i], edges[2 * i + 1], m / mass_total))
                .collect();
            GroupSparseAsf::new(clusters).expect("valid by construction")
        })
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

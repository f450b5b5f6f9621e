//! Lawson-Hanson active-set solver for `min_{x >= 0} ||A x - b||^2`.
//!
//! Each passive-set subproblem is solved exactly with a minimum-norm SVD
//! least-squares solve, so the final iterate is the exact least-squares
//! solution restricted to its support even when dictionary columns are
//! nearly collinear.

use nalgebra::{DMatrix, DVector};

use crate::error::{AsfError, Result};
use crate::linalg::min_norm_lstsq;

/// Relative singular-value cutoff for passive-set subproblems.
pub const RANK_REL_TOL: f64 = 1e-12;
/// Default tolerance factor applied to `||A^T b||_inf`.
pub const DEFAULT_TOL_FACTOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    /// Outer (variable-entering) iterations.
    pub iterations: usize,
    pub kkt_violation: f64,
    pub converged: bool,
    /// Tolerance the solve was run with.
    pub tol: f64,
}

/// `1e-10 * ||A^T b||_inf`, floored at the smallest positive normal.
pub fn default_tol(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let atb = a.tr_mul(b);
    (DEFAULT_TOL_FACTOR * atb.amax()).max(f64::MIN_POSITIVE)
}

/// Gradient `2 A^T (A x - b)` of the squared residual.
pub fn gradient(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    a.tr_mul(&(a * x - b)) * 2.0
}

/// KKT residual of `x` for the NNLS problem:
/// `max(max_{x_i > 0} |g_i|, max_{x_i = 0} (-g_i)_+)`, `g = 2 A^T (A x - b)`.
pub fn kkt_residual(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    assert_eq!(a.ncols(), x.len(), "x length must match the number of columns");
    assert_eq!(a.nrows(), b.len(), "b length must match the number of rows");
    let g = gradient(a, b, x);
    x.iter()
        .zip(g.iter())
        .map(|(&xi, &gi)| if xi > 0.0 { gi.abs() } else { (-gi).max(0.0) })
        .fold(0.0, f64::max)
}

/// Solves with the default tolerance and `max_iter = 10 n`.
pub fn solve_nnls_default(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<NnlsSolution> {
    solve_nnls(a, b, default_tol(a, b), 10 * a.ncols().max(1))
}

/// Lawson-Hanson NNLS. Stops when `-g_j <= tol` for every zero variable;
/// ties for the entering variable go to the smallest index. `converged` is
/// set only if the final KKT residual is within `tol`. If `max_iter` outer
/// iterations are exhausted the current (best) iterate is returned with
/// `converged = false`.
pub fn solve_nnls(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64, max_iter: usize) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(AsfError::Dimension(format!("A is {m}x{n} but b has length {}", b.len())));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(AsfError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(AsfError::Domain("non-finite entry in A or b".into()));
    }

    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    // variables that re-entered without moving x; cleared once x changes
    let mut blocked = vec![false; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut last_residual = b.norm();

    loop {
        let g = gradient(a, b, &x);
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..n {
            if passive[j] || blocked[j] {
                continue;
            }
            let descent = -g[j];
            if descent > tol && entering.is_none_or(|(_, best)| descent > best) {
                entering = Some((j, descent));
            }
        }
        let Some((j, _)) = entering else {
            converged = true;
            break;
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        passive[j] = true;

        let before = x.clone();
        for _ in 0..=n {
            let support: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let z = passive_solve(a, b, &support);
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (&i, &v) in support.iter().zip(z.iter()) {
                    x[i] = v;
                }
                break;
            }
            // step towards z until the first passive variable hits zero
            let mut alpha = f64::INFINITY;
            let mut leaving = support[0];
            for (&i, &zi) in support.iter().zip(z.iter()) {
                if zi <= 0.0 {
                    let step = x[i] / (x[i] - zi);
                    if step < alpha {
                        alpha = step;
                        leaving = i;
                    }
                }
            }
            for (&i, &zi) in support.iter().zip(z.iter()) {
                x[i] += alpha * (zi - x[i]);
            }
            x[leaving] = 0.0;
            for &i in &support {
                if x[i] <= 0.0 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }

        let mut residual = (a * &x - b).norm();
        if residual > last_residual * (1.0 + 1e-12) {
            // a truncated (rank-deficient) passive solve can lose fit; undo
            // the step and keep the variable out until x changes
            x.copy_from(&before);
            for i in 0..n {
                passive[i] = x[i] > 0.0;
            }
            residual = last_residual;
        }
        if x == before {
            passive[j] = false;
            blocked[j] = true;
        } else {
            blocked.iter_mut().for_each(|v| *v = false);
        }

        debug_assert!(
            residual <= last_residual * (1.0 + 1e-8) + 1e-12 * b.norm(),
            "residual increased from {last_residual} to {residual}"
        );
        last_residual = residual;
    }

    let residual_norm = (a * &x - b).norm();
    let kkt_violation = kkt_residual(a, b, &x);
    // blocked variables or inexact passive solves can leave the KKT
    // conditions unmet even when no admissible variable can enter
    if kkt_violation > tol {
        converged = false;
    }
    Ok(NnlsSolution { x, residual_norm, iterations, kkt_violation, converged, tol })
}

fn passive_solve(a: &DMatrix<f64>, b: &DVector<f64>, support: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(support);
    min_norm_lstsq(&sub, b, RANK_REL_TOL)
}

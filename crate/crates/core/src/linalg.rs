//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{AsfError, Result};
use crate::C64;

/// Normalized sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Hermitian Toeplitz matrix whose first column is `col`, i.e.
/// `T[(i, k)] = col[i - k]` for `i >= k` and `conj(col[k - i])` above the
/// diagonal.
pub fn hermitian_toeplitz(col: &[C64]) -> DMatrix<C64> {
    let m = col.len();
    DMatrix::from_fn(m, m, |i, k| if i >= k { col[i - k] } else { col[k - i].conj() })
}

/// Largest entrywise deviation `|S - S^H|`.
pub fn hermitian_asymmetry(s: &DMatrix<C64>) -> f64 {
    let n = s.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for k in i..n {
            worst = worst.max((s[(i, k)] - s[(k, i)].conj()).norm());
        }
    }
    worst
}

/// Checks that `s` is square and Hermitian up to a relative tolerance.
pub fn ensure_hermitian(s: &DMatrix<C64>, rel_tol: f64) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(AsfError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = s.iter().map(|z| z.norm()).fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    let asym = hermitian_asymmetry(s);
    if asym > rel_tol * scale {
        return Err(AsfError::NotHermitian(asym));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(s: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = s.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(s: &DMatrix<C64>) -> f64 {
    s.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// PSD square root `V diag(sqrt(max(l, 0))) V^H` of a Hermitian matrix.
/// Also returns the smallest eigenvalue before clipping.
pub fn psd_sqrt(s: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let (vals, vecs) = hermitian_eigen(s);
    let min_eig = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let mut scaled = vecs.clone();
    for (c, &l) in vals.iter().enumerate() {
        let root = l.max(0.0).sqrt();
        scaled.column_mut(c).scale_mut(root);
    }
    (&scaled * vecs.adjoint(), min_eig)
}

/// Minimum-norm least-squares solution of `a x = b` via a thin SVD.
/// Singular values below `rel_tol * s_max` are treated as zero.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
    if s_max == 0.0 {
        return DVector::zeros(a.ncols());
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let cutoff = rel_tol * s_max;
    let mut x = DVector::zeros(a.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coef = u.column(k).dot(b) / s;
            x.axpy(coef, &v_t.row(k).transpose(), 1.0);
        }
    }
    x
}

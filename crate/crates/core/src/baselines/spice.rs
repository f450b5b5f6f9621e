use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AsfError, Result};
use crate::estimators::{AsfEstimate, Diagnostics, Method};
use crate::linalg::{ensure_hermitian, hermitian_eigen, psd_sqrt};
use crate::model::{steering_vector, AngularGrid};
use crate::C64;

/// Diagonal loading applied to near-singular matrices, relative to the trace.
const TRACE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpiceOptions {
    pub max_iter: usize,
    /// Stop when the relative l1 change of the powers drops below this.
    pub tol: f64,
}

impl Default for SpiceOptions {
    fn default() -> Self {
        Self { max_iter: 1000, tol: 1e-8 }
    }
}

/// Raw SPICE output before normalization.
#[derive(Debug, Clone)]
pub struct SpiceFit {
    /// Grid powers `p_g`.
    pub powers: Vec<f64>,
    /// Common noise power.
    pub noise_power: f64,
    /// Covariance-fitting criterion after each update.
    pub criterion: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when either covariance needed diagonal loading.
    pub regularized: bool,
}

impl SpiceFit {
    /// Largest single grid power relative to total power (grid plus noise).
    pub fn peak_fraction(&self) -> f64 {
        let total = self.powers.iter().sum::<f64>() + self.noise_power;
        self.powers.iter().copied().fold(0.0, f64::max) / total
    }
}

/// Inverse of a Hermitian positive semidefinite matrix with a trace floor on
/// the eigenvalues. Returns whether the floor was hit.
fn floored_inverse(s: &DMatrix<C64>) -> (DMatrix<C64>, bool) {
    let (vals, vecs) = hermitian_eigen(s);
    let trace: f64 = vals.iter().map(|v| v.max(0.0)).sum();
    let floor = TRACE_FLOOR * trace.max(f64::MIN_POSITIVE);
    let mut hit = false;
    let inv_vals: Vec<f64> = vals
        .iter()
        .map(|&v| {
            if v < floor {
                hit = true;
            }
            1.0 / v.max(floor)
        })
        .collect();
    let mut scaled = vecs.clone();
    for (j, w) in inv_vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    (&scaled * vecs.adjoint(), hit)
}

/// SPICE fit of `A diag(p) A^H + sigma I` to a sample covariance over `grid`.
pub fn spice_fit(sample_cov: &DMatrix<C64>, grid: &AngularGrid, opts: &SpiceOptions) -> Result<SpiceFit> {
    let m = sample_cov.nrows();
    if m == 0 || sample_cov.ncols() != m {
        return Err(AsfError::Dimension(format!(
            "sample covariance must be square and non-empty, got {}x{}",
            sample_cov.nrows(),
            sample_cov.ncols()
        )));
    }
    if opts.max_iter == 0 {
        return Err(AsfError::Config("iteration cap must be >= 1".into()));
    }
    ensure_hermitian(sample_cov, 1e-9)?;
    let trace: f64 = (0..m).map(|i| sample_cov[(i, i)].re).sum();
    if trace.is_nan() || trace <= 0.0 {
        return Err(AsfError::Domain("sample covariance has zero trace".into()));
    }

    let steer = DMatrix::from_columns(
        &grid
            .points()
            .iter()
            .map(|&xi| steering_vector(xi, m).map(|a| nalgebra::DVector::from_vec(a.into_inner())))
            .collect::<Result<Vec<_>>>()?,
    );
    let (root, _) = psd_sqrt(sample_cov);
    let (sample_inv, mut regularized) = floored_inverse(sample_cov);

    let mf = m as f64;
    let weights: Vec<f64> = (0..grid.len())
        .map(|k| {
            let a = steer.column(k);
            (a.adjoint() * &sample_inv * a)[(0, 0)].re / mf
        })
        .collect();
    let noise_weight = (0..m).map(|i| sample_inv[(i, i)].re).sum::<f64>() / mf;

    let mut powers: Vec<f64> = (0..grid.len())
        .map(|k| {
            let a = steer.column(k);
            (a.adjoint() * sample_cov * a)[(0, 0)].re / (mf * mf)
        })
        .collect();
    let mut noise = trace / mf;

    let mut criterion = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut model = &steer * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            powers.len(),
            powers.iter().map(|&p| C64::new(p, 0.0)),
        )) * steer.adjoint();
        for i in 0..m {
            model[(i, i)] += noise;
        }
        let (model_inv, hit) = floored_inverse(&model);
        regularized |= hit;
        let c = &model_inv * &root;
        let proj = steer.adjoint() * &c;
        let norms: Vec<f64> = (0..grid.len()).map(|k| proj.row(k).norm()).collect();
        let noise_norm = c.norm();
        let rho: f64 = powers
            .iter()
            .zip(&weights)
            .zip(&norms)
            .map(|((p, w), n)| w.sqrt() * p * n)
            .sum::<f64>()
            + noise_weight.sqrt() * noise * noise_norm;
        if !rho.is_finite() || rho <= 0.0 {
            return Err(AsfError::Numerical(format!("SPICE normalizer degenerate: {rho}")));
        }
        let updated: Vec<f64> = powers
            .iter()
            .zip(&weights)
            .zip(&norms)
            .map(|((p, w), n)| p * n / (w.sqrt() * rho))
            .collect();
        noise = noise * noise_norm / (noise_weight.sqrt() * rho);
        let change: f64 = updated.iter().zip(&powers).map(|(a, b)| (a - b).abs()).sum();
        let scale: f64 = powers.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        powers = updated;
        criterion.push(fit_criterion(&steer, &powers, noise, &root));
        if change / scale < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(SpiceFit { powers, noise_power: noise, criterion, iterations, converged, regularized })
}

/// `tr(R_hat^{1/2} R(p)^{-1} R_hat^{1/2})`.
fn fit_criterion(steer: &DMatrix<C64>, powers: &[f64], noise: f64, root: &DMatrix<C64>) -> f64 {
    let m = steer.nrows();
    let mut model = DMatrix::<C64>::zeros(m, m);
    for (k, &p) in powers.iter().enumerate() {
        let a = steer.column(k);
        model += (a * a.adjoint()) * C64::new(p, 0.0);
    }
    for i in 0..m {
        model[(i, i)] += noise;
    }
    let (inv, _) = floored_inverse(&model);
    (root.adjoint() * inv * root).trace().re
}

/// SPICE estimate normalized to unit mass over the grid (noise excluded).
pub fn estimate_spice(sample_cov: &DMatrix<C64>, grid: &AngularGrid, opts: &SpiceOptions) -> Result<AsfEstimate> {
    let fit = spice_fit(sample_cov, grid, opts)?;
    let total: f64 = fit.powers.iter().sum();
    let gamma = if total > 0.0 {
        fit.powers.iter().map(|p| p / total).collect()
    } else {
        fit.powers.clone()
    };
    let mut flags = Vec::new();
    if !fit.converged {
        flags.push("iteration cap reached".into());
    }
    if fit.regularized {
        flags.push("diagonal loading applied to a singular covariance".into());
    }
    Ok(AsfEstimate {
        gamma,
        method: Method::Spice,
        diagnostics: Diagnostics {
            iterations: fit.iterations,
            converged: fit.converged,
            residual_norm: fit.criterion.last().copied(),
            flags,
            ..Diagnostics::default()
        },
        alpha: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{sample_covariance, sample_snapshots};
    use crate::model::{asf_to_covariance, Cluster, GroupSparseAsf};

    #[test]
    fn criterion_is_monotone() {
        let asf = GroupSparseAsf::new(vec![Cluster::flat(-0.5, -0.4, 0.5), Cluster::flat(0.3, 0.35, 0.5)])
            .unwrap();
        let cov = asf_to_covariance(&asf, 8).with_noise(0.1);
        let snaps = sample_snapshots(&cov, 64, 0.0, 3).unwrap();
        let r = sample_covariance(&snaps);
        let grid = AngularGrid::new(32).unwrap();
        let fit = spice_fit(&r, &grid, &SpiceOptions { max_iter: 200, tol: 0.0 }).unwrap();
        assert_eq!(fit.criterion.len(), 200);
        for w in fit.criterion.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} -> {}", w[0], w[1]);
        }
        assert!(fit.powers.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn identity_covariance_goes_to_noise() {
        let grid = AngularGrid::new(64).unwrap();
        let r = DMatrix::<C64>::identity(8, 8);
        let fit = spice_fit(&r, &grid, &SpiceOptions::default()).unwrap();
        assert!(fit.peak_fraction() <= 0.05, "{}", fit.peak_fraction());
    }

    #[test]
    fn strong_source_located() {
        let grid = AngularGrid::new(64).unwrap();
        let xi0 = grid.point(40);
        let a = nalgebra::DVector::from_vec(steering_vector(xi0, 8).unwrap().into_inner());
        let r = &a * a.adjoint() * C64::new(10.0, 0.0) + DMatrix::<C64>::identity(8, 8);
        let est = estimate_spice(&r, &grid, &SpiceOptions::default()).unwrap();
        let peak = est.gamma.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(peak, 40);
        assert!((est.gamma.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let grid = AngularGrid::new(16).unwrap();
        assert!(spice_fit(&DMatrix::<C64>::zeros(2, 3), &grid, &SpiceOptions::default()).is_err());
        assert!(spice_fit(&DMatrix::<C64>::zeros(3, 3), &grid, &SpiceOptions::default()).is_err());
        let opts = SpiceOptions { max_iter: 0, ..SpiceOptions::default() };
        assert!(spice_fit(&DMatrix::<C64>::identity(3, 3), &grid, &opts).is_err());
    }
}

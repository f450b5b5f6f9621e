use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{AsfError, Result};
use crate::estimators::{AsfEstimate, Diagnostics, Method};
use crate::model::AngularGrid;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct L2ProjOptions {
    pub max_iter: usize,
    /// Stop once `max_r |sigma_r - m_r| <= tol * sigma_0`.
    pub tol: f64,
    /// Clip to the nonnegative cone after each moment projection.
    pub enforce_nonnegativity: bool,
}

impl Default for L2ProjOptions {
    fn default() -> Self {
        Self { max_iter: 20000, tol: 1e-4, enforce_nonnegativity: true }
    }
}

/// Moments `m_r = (2/G) sum_g mu_g e^{j pi r xi_g}`, `r = 0..M`, of a grid
/// density (periodic trapezoid rule).
pub fn grid_moments(mu: &[f64], grid: &AngularGrid, m: usize) -> Vec<C64> {
    let dx = grid.spacing();
    (0..m)
        .map(|r| {
            grid.points()
                .iter()
                .zip(mu)
                .map(|(&xi, &v)| C64::from_polar(v, PI * r as f64 * xi))
                .sum::<C64>()
                * dx
        })
        .collect()
}

/// Alternating projections between the moment-matching affine set and the
/// nonnegative cone, started from the constant `sigma_0 / 2`.
///
/// Requires `G >= 4M` so the grid quadrature keeps the lags orthogonal.
pub fn estimate_l2_projection(
    sigma_hat: &[C64],
    grid: &AngularGrid,
    opts: &L2ProjOptions,
) -> Result<AsfEstimate> {
    let (mu, diagnostics) = l2_projection_density(sigma_hat, grid, opts)?;
    let total: f64 = mu.iter().sum();
    let gamma = if total > 0.0 { mu.iter().map(|v| v / total).collect() } else { mu };
    Ok(AsfEstimate { gamma, method: Method::L2proj, diagnostics, alpha: None })
}

/// Unnormalized density on the grid (units of `sigma_hat`) and the solve
/// diagnostics; `residual_norm` is the max moment error of that density.
pub fn l2_projection_density(
    sigma_hat: &[C64],
    grid: &AngularGrid,
    opts: &L2ProjOptions,
) -> Result<(Vec<f64>, Diagnostics)> {
    let m = sigma_hat.len();
    if m == 0 {
        return Err(AsfError::Dimension("empty sigma_hat".into()));
    }
    if grid.len() < 4 * m {
        return Err(AsfError::Config(format!(
            "l2 projection needs G >= 4M, got G = {} and M = {m}",
            grid.len()
        )));
    }
    if opts.max_iter == 0 {
        return Err(AsfError::Config("iteration cap must be >= 1".into()));
    }
    let points = grid.points();
    // conj phases e^{-j pi r xi_g}, row-major by grid point
    let phases: Vec<C64> = points
        .iter()
        .flat_map(|&xi| (0..m).map(move |r| C64::from_polar(1.0, -PI * r as f64 * xi)))
        .collect();
    let dx = grid.spacing();
    let moments = |mu: &[f64]| -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); m];
        for (g, &v) in mu.iter().enumerate() {
            if v != 0.0 {
                for r in 0..m {
                    out[r] += phases[g * m + r].conj() * v;
                }
            }
        }
        out.iter_mut().for_each(|z| *z *= dx);
        out
    };
    let residual = |mom: &[C64]| -> f64 {
        sigma_hat.iter().zip(mom).map(|(s, x)| (s - x).norm()).fold(0.0, f64::max)
    };

    let s0 = sigma_hat[0].re;
    let threshold = opts.tol * s0.abs().max(f64::MIN_POSITIVE);
    let mut mu = vec![s0 / 2.0; grid.len()];
    let mut iterations = 0;
    let mut converged = false;
    let mut last_residual = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        // affine projection: mu += sum_{|r| < M} (d_r / 2) e^{-j pi r xi}
        let d: Vec<C64> = sigma_hat.iter().zip(moments(&mu)).map(|(s, x)| s - x).collect();
        for (g, v) in mu.iter_mut().enumerate() {
            let mut corr = d[0].re / 2.0;
            for r in 1..m {
                corr += (d[r] * phases[g * m + r]).re;
            }
            *v += corr;
        }
        if !opts.enforce_nonnegativity {
            last_residual = residual(&moments(&mu));
            converged = true;
            break;
        }
        mu.iter_mut().for_each(|v| *v = v.max(0.0));
        last_residual = residual(&moments(&mu));
        if last_residual <= threshold {
            converged = true;
            break;
        }
    }

    let mut flags = Vec::new();
    if !converged {
        flags.push("moment residual above tolerance at iteration cap".into());
    }
    let diagnostics =
        Diagnostics { iterations, converged, residual_norm: Some(last_residual), flags, ..Diagnostics::default() };
    Ok((mu, diagnostics))
}

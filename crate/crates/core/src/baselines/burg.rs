use std::f64::consts::PI;

use crate::error::{AsfError, Result};
use crate::estimators::{AsfEstimate, Diagnostics, Method};
use crate::model::AngularGrid;
use crate::C64;

/// Reflection coefficients with `|k| >= 1` are pulled back to this modulus.
const KAPPA_CLIP: f64 = 1.0 - 1e-9;

/// AR model `x_n + sum_k a_k x_{n-k} = e_n` fitted to an autocorrelation
/// sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    /// `a_1 .. a_p`.
    pub coeffs: Vec<C64>,
    /// Innovation power.
    pub innovation: f64,
    pub reflection: Vec<C64>,
    /// Set when a reflection coefficient had to be clipped.
    pub clipped: bool,
}

/// Levinson-Durbin recursion on `r_0 .. r_p` (with `r_{-k} = conj(r_k)`).
pub fn levinson_durbin(r: &[C64], order: usize) -> Result<ArModel> {
    if order + 1 > r.len() {
        return Err(AsfError::Domain(format!(
            "order {order} needs {} lags, got {}",
            order + 1,
            r.len()
        )));
    }
    let r0 = r[0].re;
    if r0.is_nan() || r0 <= 0.0 {
        return Err(AsfError::Domain(format!("r_0 = {r0} must be positive")));
    }
    let mut a: Vec<C64> = Vec::with_capacity(order);
    let mut reflection = Vec::with_capacity(order);
    let mut err = r0;
    let mut clipped = false;
    for m in 1..=order {
        let mut acc = r[m];
        for k in 1..m {
            acc += a[k - 1] * r[m - k];
        }
        let mut kappa = -acc / err;
        if kappa.norm() >= 1.0 {
            kappa = kappa / kappa.norm() * KAPPA_CLIP;
            clipped = true;
        }
        let prev = a.clone();
        for k in 1..m {
            a[k - 1] = prev[k - 1] + kappa * prev[m - k - 1].conj();
        }
        a.push(kappa);
        reflection.push(kappa);
        err *= 1.0 - kappa.norm_sqr();
    }
    Ok(ArModel { coeffs: a, innovation: err, reflection, clipped })
}

/// Maximum-entropy density `eps / (2 |1 + sum_k a_k e^{-j pi k xi}|^2)`,
/// scaled so that its moments `int p(xi) e^{j pi r xi} dxi` are the AR
/// autocorrelations.
pub fn ar_density(xi: f64, model: &ArModel) -> f64 {
    let mut poly = C64::new(1.0, 0.0);
    for (k, a) in model.coeffs.iter().enumerate() {
        poly += a * C64::from_polar(1.0, -PI * (k + 1) as f64 * xi);
    }
    model.innovation / (2.0 * poly.norm_sqr())
}

/// Burg maximum-entropy estimate on `grid`. `order = None` uses `M - 1`.
pub fn estimate_burg(sigma_hat: &[C64], order: Option<usize>, grid: &AngularGrid) -> Result<AsfEstimate> {
    let m = sigma_hat.len();
    if m == 0 {
        return Err(AsfError::Dimension("empty sigma_hat".into()));
    }
    let order = order.unwrap_or(m - 1);
    if order + 1 > m {
        return Err(AsfError::Domain(format!("order {order} exceeds M - 1 = {}", m - 1)));
    }
    let model = levinson_durbin(sigma_hat, order)?;
    let density: Vec<f64> = grid.points().iter().map(|&xi| ar_density(xi, &model)).collect();
    let total: f64 = density.iter().sum();
    let gamma = density.iter().map(|v| v / total).collect();
    let mut flags = Vec::new();
    if model.clipped {
        flags.push("reflection coefficient clipped (autocorrelation not positive definite)".into());
    }
    Ok(AsfEstimate {
        gamma,
        method: Method::Burg,
        diagnostics: Diagnostics {
            iterations: order,
            converged: !model.clipped,
            flags,
            ..Diagnostics::default()
        },
        alpha: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn white_process_is_flat() {
        let grid = AngularGrid::new(32).unwrap();
        let mut sigma = vec![C64::new(0.0, 0.0); 6];
        sigma[0] = C64::new(1.0, 0.0);
        let est = estimate_burg(&sigma, None, &grid).unwrap();
        for v in est.gamma {
            assert_abs_diff_eq!(v, 1.0 / 32.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn first_order_peak() {
        let (rho, xi0) = (0.8f64, 0.3);
        let sigma: Vec<C64> =
            (0..4).map(|r| C64::from_polar(rho.powi(r), PI * r as f64 * xi0)).collect();
        let model = levinson_durbin(&sigma, 1).unwrap();
        let expected = -C64::from_polar(rho, PI * xi0);
        assert!((model.coeffs[0] - expected).norm() < 1e-14);
        assert_abs_diff_eq!(model.innovation, 1.0 - rho * rho, epsilon = 1e-14);

        let grid = AngularGrid::new(200).unwrap();
        let est = estimate_burg(&sigma, Some(1), &grid).unwrap();
        let peak = est.gamma.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_abs_diff_eq!(grid.point(peak), xi0, epsilon = 1e-12);
        assert!(est.gamma.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn solves_yule_walker_equations() {
        // AR(1)-like sequence plus a second component, still positive definite
        let sigma: Vec<C64> = (0..6)
            .map(|r| {
                let r = r as f64;
                C64::from_polar(0.6 * 0.9f64.powf(r), PI * r * 0.2)
                    + C64::from_polar(0.4 * 0.7f64.powf(r), -PI * r * 0.5)
            })
            .collect();
        let p = 5;
        let model = levinson_durbin(&sigma, p).unwrap();
        let lag = |k: i64| if k >= 0 { sigma[k as usize] } else { sigma[(-k) as usize].conj() };
        for i in 1..=p as i64 {
            let mut acc = lag(i);
            for (k, a) in model.coeffs.iter().enumerate() {
                acc += a * lag(i - (k as i64 + 1));
            }
            assert!(acc.norm() < 1e-12, "normal equation {i}: {acc}");
        }
        assert!(!model.clipped);
    }

    #[test]
    fn non_pd_sequence_is_clipped_and_flagged() {
        let sigma = vec![C64::new(1.0, 0.0), C64::new(1.5, 0.0), C64::new(0.0, 0.0)];
        let grid = AngularGrid::new(16).unwrap();
        let est = estimate_burg(&sigma, None, &grid).unwrap();
        assert!(!est.diagnostics.converged);
        assert!(!est.diagnostics.flags.is_empty());
        assert!(est.gamma.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn order_bounds() {
        let sigma = vec![C64::new(1.0, 0.0); 3];
        let grid = AngularGrid::new(8).unwrap();
        assert!(estimate_burg(&sigma, Some(3), &grid).is_err());
        assert!(levinson_durbin(&[C64::new(0.0, 0.0)], 0).is_err());
    }
}

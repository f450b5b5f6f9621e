use nalgebra::{DMatrix, DVector};

use super::dictionary::PulseDictionary;
use super::estimate::{AsfEstimate, Diagnostics, Method};
use crate::covariance::NnlsProblem;
use crate::error::{AsfError, Result};
use crate::nnls::{solve_nnls_default, NnlsSolution};

fn diagnostics(sol: &NnlsSolution, varsigma_prime: Option<f64>) -> Diagnostics {
    let mut flags = Vec::new();
    if !sol.converged {
        flags.push("nnls solver did not converge".to_string());
    }
    Diagnostics {
        iterations: sol.iterations,
        converged: sol.converged,
        residual_norm: Some(sol.residual_norm),
        kkt_violation: Some(sol.kkt_violation),
        varsigma_prime,
        flags,
    }
}

/// Plain NNLS estimate `argmin_{gamma >= 0} ||A gamma - b||^2`.
pub fn estimate_nnls(problem: &NnlsProblem) -> Result<AsfEstimate> {
    let sol = solve_nnls_default(&problem.a, &problem.b)?;
    Ok(AsfEstimate {
        gamma: sol.x.iter().copied().collect(),
        method: Method::Nnls,
        diagnostics: diagnostics(&sol, None),
        alpha: None,
    })
}

/// Precomputed data for generalized NNLS over one dictionary:
/// `min_{alpha >= 0} ||A D alpha - b||^2 + s' ||alpha||_1^2`, solved as the
/// stacked NNLS with `A~ = [sqrt(s') 1^T; A D]`, `b~ = [0; b]`.
#[derive(Debug, Clone)]
pub struct GnnlsSystem {
    phi: DMatrix<f64>,
    b: DVector<f64>,
    dict: PulseDictionary,
}

/// One point of a regularization sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub varsigma_prime: f64,
    pub estimate: AsfEstimate,
    /// Data-fit residual `||A D alpha - b||`.
    pub fit_residual: f64,
    pub alpha_l1: f64,
}

impl GnnlsSystem {
    pub fn new(problem: &NnlsProblem, dict: &PulseDictionary) -> Result<Self> {
        if problem.a.ncols() != dict.grid_size() {
            return Err(AsfError::Dimension(format!(
                "problem has {} grid columns, dictionary grid is {}",
                problem.a.ncols(),
                dict.grid_size()
            )));
        }
        let phi = &problem.a * dict.matrix();
        Ok(Self { phi, b: problem.b.clone(), dict: dict.clone() })
    }

    /// `Phi = A D`.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn dictionary(&self) -> &PulseDictionary {
        &self.dict
    }

    /// `||A~^T b~||_inf = ||Phi^T b||_inf` (independent of the penalty).
    pub fn scale(&self) -> f64 {
        self.phi.tr_mul(&self.b).amax()
    }

    pub fn stacked(&self, varsigma_prime: f64) -> (DMatrix<f64>, DVector<f64>) {
        let (rows, cols) = self.phi.shape();
        let mut a = DMatrix::zeros(rows + 1, cols);
        a.row_mut(0).fill(varsigma_prime.sqrt());
        a.view_mut((1, 0), (rows, cols)).copy_from(&self.phi);
        let mut b = DVector::zeros(rows + 1);
        b.rows_mut(1, rows).copy_from(&self.b);
        (a, b)
    }

    pub fn fit_residual(&self, alpha: &[f64]) -> f64 {
        (&self.phi * DVector::from_column_slice(alpha) - &self.b).norm()
    }

    pub fn solve(&self, varsigma_prime: f64) -> Result<AsfEstimate> {
        if !varsigma_prime.is_finite() || varsigma_prime < 0.0 {
            return Err(AsfError::Domain(format!("varsigma' = {varsigma_prime} must be >= 0")));
        }
        let (a, b) = self.stacked(varsigma_prime);
        let sol = solve_nnls_default(&a, &b)?;
        let alpha: Vec<f64> = sol.x.iter().copied().collect();
        let mut diag = diagnostics(&sol, Some(varsigma_prime));
        diag.residual_norm = Some(self.fit_residual(&alpha));
        Ok(AsfEstimate {
            gamma: self.dict.synthesize(&alpha),
            method: Method::Gnnls,
            diagnostics: diag,
            alpha: Some(alpha),
        })
    }

    /// Solves every penalty in `values` (independent solves, run in
    /// parallel), in the given order.
    pub fn sweep(&self, values: &[f64]) -> Result<Vec<SweepPoint>> {
        use rayon::prelude::*;
        values
            .par_iter()
            .map(|&s| {
                let estimate = self.solve(s)?;
                let alpha = estimate.alpha.as_deref().expect("gnnls sets alpha");
                let fit_residual = self.fit_residual(alpha);
                let alpha_l1 = alpha.iter().sum();
                Ok(SweepPoint { varsigma_prime: s, estimate, fit_residual, alpha_l1 })
            })
            .collect()
    }
}

/// `{0} U logspace(1e-4, 1, 9) * scale`.
pub fn default_sweep(scale: f64) -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..9).map(|i| 10f64.powf(-4.0 + 0.5 * i as f64) * scale))
        .collect()
}

/// Generalized NNLS estimate for one penalty value.
pub fn estimate_gnnls(
    problem: &NnlsProblem,
    dict: &PulseDictionary,
    varsigma_prime: f64,
) -> Result<AsfEstimate> {
    GnnlsSystem::new(problem, dict)?.solve(varsigma_prime)
}

/// Certificate that a generalized NNLS solution also solves the
/// l1-regularized problem `min ||Phi alpha - b||^2 + s ||alpha||_1` with
/// `s = 2 s' ||alpha||_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub varsigma: f64,
    pub max_violation: f64,
    /// `||A~^T b~||_inf`, the natural scale for `max_violation`.
    pub scale: f64,
}

pub fn l1_certificate(
    alpha_star: &[f64],
    problem: &NnlsProblem,
    dict: &PulseDictionary,
    varsigma_prime: f64,
) -> Result<CertificateReport> {
    let system = GnnlsSystem::new(problem, dict)?;
    certificate_for_system(alpha_star, &system, varsigma_prime)
}

pub(crate) fn certificate_for_system(
    alpha_star: &[f64],
    system: &GnnlsSystem,
    varsigma_prime: f64,
) -> Result<CertificateReport> {
    if alpha_star.len() != system.phi.ncols() {
        return Err(AsfError::Dimension("alpha length does not match the dictionary".into()));
    }
    let l1: f64 = alpha_star.iter().sum();
    if alpha_star.iter().all(|&a| a == 0.0) {
        return Err(AsfError::PreconditionUnmet("alpha* = 0".into()));
    }
    let varsigma = 2.0 * varsigma_prime * l1;
    let alpha = DVector::from_column_slice(alpha_star);
    let grad = system.phi.tr_mul(&(&system.phi * alpha - &system.b)) * 2.0;
    let max_violation = alpha_star
        .iter()
        .zip(grad.iter())
        .map(|(&a, &g)| {
            let h = g + varsigma;
            if a > 0.0 { h.abs() } else { (-h).max(0.0) }
        })
        .fold(0.0, f64::max);
    Ok(CertificateReport { varsigma, max_violation, scale: system.scale() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::build_grid_problem;
    use crate::model::{atom_first_column, AngularGrid};

    fn pulse_problem() -> NnlsProblem {
        let grid = AngularGrid::new(8).unwrap();
        let mut sigma = atom_first_column(2, &grid, 8).unwrap();
        for (s, t) in sigma.iter_mut().zip(atom_first_column(3, &grid, 8).unwrap()) {
            *s += t;
        }
        build_grid_problem(&sigma, &grid, 0.0).unwrap()
    }

    #[test]
    fn zero_penalty_matches_nnls_fit() {
        let p = pulse_problem();
        let dict = PulseDictionary::new(8, 2).unwrap();
        let plain = estimate_nnls(&p).unwrap();
        let gen = estimate_gnnls(&p, &dict, 0.0).unwrap();
        let r_plain = plain.diagnostics.residual_norm.unwrap();
        let r_gen = gen.diagnostics.residual_norm.unwrap();
        assert!((r_plain - r_gen).abs() < 1e-8);
    }

    #[test]
    fn huge_penalty_kills_alpha() {
        let p = pulse_problem();
        let dict = PulseDictionary::new(8, 2).unwrap();
        let system = GnnlsSystem::new(&p, &dict).unwrap();
        let est = system.solve(1e6 * system.scale()).unwrap();
        let l1: f64 = est.alpha.unwrap().iter().sum();
        let l1_free: f64 = system.solve(0.0).unwrap().alpha.unwrap().iter().sum();
        assert!(l1 < 1e-3 * l1_free, "{l1} vs {l1_free}");
    }

    #[test]
    fn gamma_is_dictionary_synthesis() {
        let p = pulse_problem();
        let dict = PulseDictionary::new(8, 3).unwrap();
        let est = estimate_gnnls(&p, &dict, 1e-3).unwrap();
        let alpha = est.alpha.as_ref().unwrap();
        let back = dict.matrix() * DVector::from_column_slice(alpha);
        for (a, b) in back.iter().zip(&est.gamma) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn certificate_on_single_atom() {
        // Phi = [phi] with phi = (1, 1), b = (2, 2). The stacked problem
        // min (phi.alpha - b)^2 + s' alpha^2 gives alpha = 4 / (2 + s').
        // With s = 2 s' alpha the l1 KKT condition reads 2(2 alpha - 4) + s = 0.
        let problem = NnlsProblem {
            a: DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            b: DVector::from_vec(vec![2.0, 2.0]),
            array_size: 1,
            grid_size: 1,
            noise_power: 0.0,
        };
        let dict = PulseDictionary::new(1, 1).unwrap();
        let s_prime = 0.5;
        let est = estimate_gnnls(&problem, &dict, s_prime).unwrap();
        let alpha = est.alpha.as_ref().unwrap()[0];
        assert!((alpha - 4.0 / 2.5).abs() < 1e-12);
        let varsigma = 2.0 * s_prime * alpha;
        assert!((2.0 * (2.0 * alpha - 4.0) + varsigma).abs() < 1e-12);
        let report = l1_certificate(&[alpha], &problem, &dict, s_prime).unwrap();
        assert!((report.varsigma - varsigma).abs() < 1e-15);
        assert!(report.max_violation < 1e-12);
    }

    #[test]
    fn certificate_rejects_zero_alpha() {
        let p = pulse_problem();
        let dict = PulseDictionary::new(8, 2).unwrap();
        let zero = vec![0.0; dict.len()];
        assert!(matches!(
            l1_certificate(&zero, &p, &dict, 0.1),
            Err(AsfError::PreconditionUnmet(_))
        ));
    }

    #[test]
    fn sweep_layout() {
        let s = default_sweep(2.0);
        assert_eq!(s.len(), 10);
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 2e-4).abs() < 1e-18);
        assert!((s[9] - 2.0).abs() < 1e-12);
    }
}

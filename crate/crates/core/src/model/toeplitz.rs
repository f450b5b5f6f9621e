use nalgebra::DMatrix;

use crate::error::{AsfError, Result};
use crate::linalg::{hermitian_toeplitz, min_eigenvalue};
use crate::C64;

/// Relative tolerance `eps` in the PSD check `lambda_min >= -eps M sigma_0`.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Hermitian Toeplitz covariance, stored by its first column
/// `(sigma_0, ..., sigma_{M-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCovariance {
    first_column: Vec<C64>,
}

impl ToeplitzCovariance {
    /// Validates that `sigma_0` is real and nonnegative.
    pub fn new(first_column: Vec<C64>) -> Result<Self> {
        let s0 = *first_column
            .first()
            .ok_or_else(|| AsfError::Dimension("empty first column".into()))?;
        if s0.re < 0.0 || s0.im.abs() > 1e-12 * s0.re.abs().max(1.0) {
            return Err(AsfError::Domain(format!("sigma_0 = {s0} must be real and nonnegative")));
        }
        Ok(Self::from_moments(first_column))
    }

    pub(crate) fn from_moments(mut first_column: Vec<C64>) -> Self {
        if let Some(s0) = first_column.first_mut() {
            s0.im = 0.0;
        }
        Self { first_column }
    }

    pub fn first_column(&self) -> &[C64] {
        &self.first_column
    }

    pub fn array_size(&self) -> usize {
        self.first_column.len()
    }

    pub fn sigma0(&self) -> f64 {
        self.first_column[0].re
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        hermitian_toeplitz(&self.first_column)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.to_matrix())
    }

    pub fn is_psd(&self) -> bool {
        let m = self.array_size() as f64;
        self.min_eigenvalue() >= -PSD_REL_TOL * m * self.sigma0()
    }

    /// Adds `n0 I`, i.e. `n0` to `sigma_0`.
    pub fn with_noise(&self, n0: f64) -> Self {
        let mut col = self.first_column.clone();
        col[0] += C64::new(n0, 0.0);
        Self { first_column: col }
    }
}

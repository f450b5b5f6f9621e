use std::f64::consts::PI;
use std::ops::Deref;

use crate::error::{AsfError, Result};
use crate::linalg::sinc;
use crate::C64;

/// Uniform grid of `G` sine-angles `xi_g = -1 + 2 g / G`, `g = 0..G`.
///
/// Grid point `g` is the center of the rectangular pulse (cell)
/// `[xi_g - 1/G, xi_g + 1/G]`. Cell 0 straddles `-1` and is wrapped
/// periodically, so the cells tile `[-1, 1]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    size: usize,
}

impl AngularGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(AsfError::Domain(format!("grid size must be at least 2, got {size}")));
        }
        Ok(Self { size })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `2 / G`, also the width of every cell.
    pub fn spacing(&self) -> f64 {
        2.0 / self.size as f64
    }

    pub fn point(&self, g: usize) -> f64 {
        -1.0 + 2.0 * g as f64 / self.size as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.size).map(|g| self.point(g)).collect()
    }

    /// Sub-intervals of `[-1, 1]` making up cell `g` (two pieces for the
    /// wrapped cell 0).
    pub fn cell_pieces(&self, g: usize) -> Vec<(f64, f64)> {
        let half = 1.0 / self.size as f64;
        if g == 0 {
            vec![(-1.0, -1.0 + half), (1.0 - half, 1.0)]
        } else {
            let c = self.point(g);
            vec![(c - half, c + half)]
        }
    }

    pub(crate) fn check_index(&self, g: usize) -> Result<()> {
        if g >= self.size {
            return Err(AsfError::IndexOutOfRange { index: g, size: self.size });
        }
        Ok(())
    }
}

/// ULA array response `a(xi) = (1, e^{j pi xi}, ..., e^{j pi (M-1) xi})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(Vec<C64>);

impl SteeringVector {
    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }
}

impl Deref for SteeringVector {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

pub fn steering_vector(xi: f64, m: usize) -> Result<SteeringVector> {
    if m == 0 {
        return Err(AsfError::Domain("array size must be positive".into()));
    }
    if !(-1.0..=1.0).contains(&xi) {
        return Err(AsfError::Domain(format!("sine-angle {xi} outside [-1, 1]")));
    }
    Ok(SteeringVector(
        (0..m).map(|r| C64::from_polar(1.0, PI * r as f64 * xi)).collect(),
    ))
}

/// First column of the covariance of the unit-height pulse on cell `g`:
/// `[psi_g]_r = (2/G) e^{j pi r xi_g} sinc(r/G)`.
pub fn atom_first_column(g: usize, grid: &AngularGrid, m: usize) -> Result<Vec<C64>> {
    grid.check_index(g)?;
    let width = grid.spacing();
    let xi = grid.point(g);
    let n = grid.len() as f64;
    Ok((0..m)
        .map(|r| {
            let r = r as f64;
            C64::from_polar(width * sinc(r / n), PI * r * xi)
        })
        .collect())
}

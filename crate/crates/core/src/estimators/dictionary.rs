use nalgebra::DMatrix;

use crate::error::{AsfError, Result};

/// Discrete rectangular pulse `(e_start + ... + e_{start+width-1}) / sqrt(width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pulse {
    pub start: usize,
    pub width: usize,
}

impl Pulse {
    pub fn amplitude(&self) -> f64 {
        1.0 / (self.width as f64).sqrt()
    }

    pub fn cells(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.width
    }
}

/// All unit-norm discrete pulses of widths `1..=p0` on a grid of size `G`,
/// ordered by width then start. Width-1 pulses come first, so atom `g` for
/// `g < G` is the canonical vector `e_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseDictionary {
    grid_size: usize,
    max_width: usize,
    atoms: Vec<Pulse>,
}

impl PulseDictionary {
    pub fn new(grid_size: usize, max_width: usize) -> Result<Self> {
        if max_width == 0 || max_width > grid_size {
            return Err(AsfError::Domain(format!(
                "pulse width bound p0 = {max_width} outside 1..={grid_size}"
            )));
        }
        let atoms = (1..=max_width)
            .flat_map(|width| (0..=grid_size - width).map(move |start| Pulse { start, width }))
            .collect();
        Ok(Self { grid_size, max_width, atoms })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn max_width(&self) -> usize {
        self.max_width
    }

    pub fn atoms(&self) -> &[Pulse] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Dense `G x D` dictionary matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.grid_size, self.atoms.len());
        for (j, p) in self.atoms.iter().enumerate() {
            for i in p.cells() {
                d[(i, j)] = p.amplitude();
            }
        }
        d
    }

    /// `D alpha`.
    pub fn synthesize(&self, alpha: &[f64]) -> Vec<f64> {
        assert_eq!(alpha.len(), self.atoms.len());
        let mut gamma = vec![0.0; self.grid_size];
        for (p, &a) in self.atoms.iter().zip(alpha) {
            if a != 0.0 {
                let v = a * p.amplitude();
                gamma[p.cells()].iter_mut().for_each(|g| *g += v);
            }
        }
        gamma
    }

    /// Coefficients putting `gamma` on the width-1 atoms, so that
    /// `D alpha = gamma` and `||alpha||_1 = ||gamma||_1`.
    pub fn embed(&self, gamma: &[f64]) -> Vec<f64> {
        assert_eq!(gamma.len(), self.grid_size);
        let mut alpha = vec![0.0; self.atoms.len()];
        alpha[..self.grid_size].copy_from_slice(gamma);
        alpha
    }
}

/// `max(2, ceil(G / M))`.
pub fn default_p0(grid_size: usize, array_size: usize) -> usize {
    grid_size.div_ceil(array_size.max(1)).max(2)
}

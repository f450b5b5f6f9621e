//! Atomic l1 norm over the pulse dictionary:
//! `min ||alpha||_1 s.t. D alpha = gamma, alpha >= 0`, solved exactly by a
//! dense tableau simplex started from the canonical (width-1) basis.

use super::dictionary::PulseDictionary;
use crate::error::{AsfError, Result};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicNorm {
    pub value: f64,
    pub alpha: Vec<f64>,
    pub pivots: usize,
}

pub fn atomic_l1_norm(gamma: &[f64], dict: &PulseDictionary) -> Result<AtomicNorm> {
    let rows = dict.grid_size();
    if gamma.len() != rows {
        return Err(AsfError::Dimension(format!(
            "gamma has length {}, dictionary grid is {rows}",
            gamma.len()
        )));
    }
    if gamma.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(AsfError::Domain("gamma must be finite and nonnegative".into()));
    }
    let cols = dict.len();
    let d = dict.matrix();

    // tableau = B^{-1} [D | gamma]; the initial basis is the identity
    let width = cols + 1;
    let mut tab = vec![0.0; rows * width];
    for i in 0..rows {
        for j in 0..cols {
            tab[i * width + j] = d[(i, j)];
        }
        tab[i * width + cols] = gamma[i];
    }
    let mut basis: Vec<usize> = (0..rows).collect();
    let mut pivots = 0;
    let max_pivots = 50 * (rows + cols);

    loop {
        // all costs are 1, so the reduced cost is 1 - sum_i tab[i][j]; Bland's rule
        let entering = (0..cols).find(|&j| {
            let col_sum: f64 = (0..rows).map(|i| tab[i * width + j]).sum();
            1.0 - col_sum < -PIVOT_EPS
        });
        let Some(q) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..rows {
            let piv = tab[i * width + q];
            if piv > PIVOT_EPS {
                let ratio = tab[i * width + cols] / piv;
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && basis[i] < basis[r])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((p, _)) = leave else {
            return Err(AsfError::Numerical("atomic norm LP is unbounded".into()));
        };

        let piv = tab[p * width + q];
        for j in 0..width {
            tab[p * width + j] /= piv;
        }
        for i in 0..rows {
            if i == p {
                continue;
            }
            let factor = tab[i * width + q];
            if factor != 0.0 {
                for j in 0..width {
                    tab[i * width + j] -= factor * tab[p * width + j];
                }
            }
        }
        basis[p] = q;
        pivots += 1;
        if pivots > max_pivots {
            return Err(AsfError::Numerical("simplex pivot limit reached".into()));
        }
    }

    let mut alpha = vec![0.0; cols];
    for (i, &j) in basis.iter().enumerate() {
        alpha[j] = tab[i * width + cols].max(0.0);
    }
    let value = alpha.iter().sum();
    Ok(AtomicNorm { value, alpha, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn norm(gamma: &[f64], p0: usize) -> f64 {
        let dict = PulseDictionary::new(gamma.len(), p0).unwrap();
        atomic_l1_norm(gamma, &dict).unwrap().value
    }

    #[test]
    fn worked_examples() {
        assert_abs_diff_eq!(norm(&[2.0, 0.0, 2.0, 0.0], 2), 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(norm(&[1.0, 1.0, 1.0, 1.0], 2), 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(norm(&[1.0, 1.0, 1.0, 1.0, 0.0], 3), 1.0 + 3f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(norm(&[1.0, 1.0, 0.0, 1.0, 1.0], 3), 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(norm(&[1.0, 1.0, 1.0, 1.0, 0.0], 2), 2.0 * 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn minimizer_is_feasible() {
        let gamma = [0.5, 1.0, 1.0, 0.2, 0.0, 3.0];
        let dict = PulseDictionary::new(6, 3).unwrap();
        let res = atomic_l1_norm(&gamma, &dict).unwrap();
        let back = dict.synthesize(&res.alpha);
        for (a, b) in back.iter().zip(&gamma) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        assert!(res.alpha.iter().all(|&a| a >= 0.0));
        assert_abs_diff_eq!(res.value, res.alpha.iter().sum::<f64>(), epsilon = 1e-12);
    }

    #[test]
    fn canonical_dictionary_is_plain_l1() {
        let gamma = [0.3, 0.0, 2.5, 1.25];
        assert_eq!(norm(&gamma, 1), gamma.iter().sum::<f64>());
    }

    #[test]
    fn rejects_negative_and_mismatched() {
        let dict = PulseDictionary::new(3, 2).unwrap();
        assert!(atomic_l1_norm(&[1.0, -0.5, 0.0], &dict).is_err());
        assert!(atomic_l1_norm(&[1.0, 0.5], &dict).is_err());
    }
}

//! Snapshot simulation, sample covariance, Toeplitzification and assembly of
//! the weighted real-valued NNLS data `(A, b)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AsfError, Result};
use crate::linalg::{ensure_hermitian, hermitian_toeplitz, psd_sqrt};
use crate::model::{atom_first_column, AngularGrid, ToeplitzCovariance};
use crate::C64;

/// Eigenvalues below `-NEG_EIG_WARN * sigma_0` trigger a warning when the
/// covariance square root is formed.
const NEG_EIG_WARN: f64 = 1e-8;

/// `T` noisy channel snapshots, stored as the columns of an `M x T` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    samples: DMatrix<C64>,
    noise_power: f64,
    seed: u64,
}

impl SnapshotSet {
    pub fn new(samples: DMatrix<C64>, noise_power: f64, seed: u64) -> Result<Self> {
        if samples.ncols() == 0 || samples.nrows() == 0 {
            return Err(AsfError::Dimension("snapshot set needs M >= 1 and T >= 1".into()));
        }
        if noise_power.is_nan() || noise_power < 0.0 {
            return Err(AsfError::Domain(format!("noise power {noise_power} must be >= 0")));
        }
        Ok(Self { samples, noise_power, seed })
    }

    pub fn samples(&self) -> &DMatrix<C64> {
        &self.samples
    }

    pub fn array_size(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meta(&self) -> SnapshotMeta {
        SnapshotMeta { m: self.array_size(), t: self.len(), n0: self.noise_power, seed: self.seed }
    }

    /// Writes `T` rows of `2M` interleaved `re,im` columns, plus the JSON
    /// sidecar next to it (same stem, `.json` extension).
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for s in 0..self.len() {
            let row: Vec<String> = self
                .samples
                .column(s)
                .iter()
                .flat_map(|z| [z.re.to_string(), z.im.to_string()])
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&self.meta())?)?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let meta: SnapshotMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let text = std::fs::read_to_string(path)?;
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.len() != meta.t {
            return Err(AsfError::Parse(format!("expected {} rows, found {}", meta.t, rows.len())));
        }
        let mut samples = DMatrix::zeros(meta.m, meta.t);
        for (s, line) in rows.iter().enumerate() {
            let vals = parse_floats(line)?;
            if vals.len() != 2 * meta.m {
                return Err(AsfError::Parse(format!(
                    "row {s}: expected {} columns, found {}",
                    2 * meta.m,
                    vals.len()
                )));
            }
            for i in 0..meta.m {
                samples[(i, s)] = C64::new(vals[2 * i], vals[2 * i + 1]);
            }
        }
        SnapshotSet::new(samples, meta.n0, meta.seed)
    }
}

/// JSON sidecar accompanying snapshot and first-column CSV files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N0")]
    pub n0: f64,
    pub seed: u64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub(crate) fn parse_floats(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| AsfError::Parse(format!("{v:?}: {e}"))))
        .collect()
}

/// Writes a covariance first column as `lag,re,im` rows with a JSON sidecar.
pub fn save_first_column_csv(path: &Path, sigma: &[C64], meta: &SnapshotMeta) -> Result<()> {
    let mut out = String::from("lag,re,im\n");
    for (k, z) in sigma.iter().enumerate() {
        writeln!(out, "{k},{},{}", z.re, z.im).expect("write to string");
    }
    std::fs::write(path, out)?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

pub fn load_first_column_csv(path: &Path) -> Result<(Vec<C64>, SnapshotMeta)> {
    let meta: SnapshotMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let text = std::fs::read_to_string(path)?;
    let mut sigma = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let vals = parse_floats(line)?;
        if vals.len() != 3 {
            return Err(AsfError::Parse(format!("expected lag,re,im, got {line:?}")));
        }
        sigma.push(C64::new(vals[1], vals[2]));
    }
    if sigma.len() != meta.m {
        return Err(AsfError::Parse(format!("expected {} lags, found {}", meta.m, sigma.len())));
    }
    Ok((sigma, meta))
}

fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draws `y(s) = Sigma^{1/2} w(s) + sqrt(N0) z(s)` with `w, z` i.i.d.
/// standard circular complex Gaussian. Deterministic in `seed`.
pub fn sample_snapshots(cov: &ToeplitzCovariance, t: usize, n0: f64, seed: u64) -> Result<SnapshotSet> {
    sample_snapshots_from_matrix(&cov.to_matrix(), t, n0, seed)
}

/// As [`sample_snapshots`] for an arbitrary Hermitian PSD covariance.
pub fn sample_snapshots_from_matrix(
    sigma: &DMatrix<C64>,
    t: usize,
    n0: f64,
    seed: u64,
) -> Result<SnapshotSet> {
    ensure_hermitian(sigma, 1e-12)?;
    if t == 0 {
        return Err(AsfError::Domain("snapshot count T must be >= 1".into()));
    }
    if n0.is_nan() || n0 < 0.0 {
        return Err(AsfError::Domain(format!("noise power {n0} must be >= 0")));
    }
    let m = sigma.nrows();
    let (root, min_eig) = psd_sqrt(sigma);
    let scale = sigma.diagonal().iter().map(|z| z.re).fold(0.0_f64, f64::max);
    if min_eig < -NEG_EIG_WARN * scale {
        log::warn!("covariance has eigenvalue {min_eig:e}; clipped to zero for sampling");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_amp = n0.sqrt();
    let mut w = DMatrix::zeros(m, t);
    let mut z = DMatrix::zeros(m, t);
    for s in 0..t {
        for i in 0..m {
            w[(i, s)] = complex_normal(&mut rng);
        }
        for i in 0..m {
            z[(i, s)] = complex_normal(&mut rng) * noise_amp;
        }
    }
    let samples = &root * w + z;
    SnapshotSet::new(samples, n0, seed)
}

/// `(1/T) sum_s y(s) y(s)^H`, Hermitian by construction.
pub fn sample_covariance(snapshots: &SnapshotSet) -> DMatrix<C64> {
    let y = snapshots.samples();
    let (m, t) = (y.nrows(), y.ncols());
    let inv_t = 1.0 / t as f64;
    let mut s = DMatrix::zeros(m, m);
    for i in 0..m {
        for k in 0..=i {
            let mut acc = C64::new(0.0, 0.0);
            for col in 0..t {
                acc += y[(i, col)] * y[(k, col)].conj();
            }
            acc *= inv_t;
            if i == k {
                acc.im = 0.0;
            }
            s[(i, k)] = acc;
            s[(k, i)] = acc.conj();
        }
    }
    s
}

/// Averages the sub-diagonals of `S`: `sigma_k = mean_l S[l + k, l]`.
///
/// The result is the first column of the Toeplitz projection of `S`, in the
/// same convention as [`ToeplitzCovariance`].
pub fn toeplitzify(s: &DMatrix<C64>) -> Vec<C64> {
    let m = s.nrows();
    (0..m)
        .map(|k| {
            let n = m - k;
            let sum: C64 = (0..n).map(|l| s[(l + k, l)]).sum();
            let mut v = sum / n as f64;
            if k == 0 {
                v.im = 0.0;
            }
            v
        })
        .collect()
}

/// Hermitian Toeplitz matrix of a first column (inverse of [`toeplitzify`] on
/// Toeplitz input).
pub fn toeplitz_matrix(sigma: &[C64]) -> DMatrix<C64> {
    hermitian_toeplitz(sigma)
}

/// Diagonal of `W`: `(sqrt(M), sqrt(2(M-1)), ..., sqrt(2))`.
pub fn weight_matrix(m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| if k == 0 { (m as f64).sqrt() } else { (2.0 * (m - k) as f64).sqrt() })
        .collect()
}

/// Real-valued NNLS data for `min_{gamma >= 0} ||A gamma - b||^2`.
///
/// Rows `0..M` hold the real parts of the weighted moment equations, rows
/// `M..2M-1` the imaginary parts of lags `1..M` (lag 0 is real).
#[derive(Debug, Clone, PartialEq)]
pub struct NnlsProblem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub array_size: usize,
    pub grid_size: usize,
    pub noise_power: f64,
}

impl NnlsProblem {
    /// `A^T e_1 > 0` elementwise: every atom has positive weighted power,
    /// which keeps the NNLS solution bounded away from trivial fits.
    pub fn first_row_positive(&self) -> bool {
        self.a.row(0).iter().all(|&v| v > 0.0)
    }
}

/// Stacks complex lags `0..M` into `2M - 1` reals (drops `Im` of lag 0).
pub fn real_stack(v: &[C64]) -> DVector<f64> {
    let m = v.len();
    let mut out = DVector::zeros(2 * m - 1);
    for (k, z) in v.iter().enumerate() {
        out[k] = z.re;
        if k > 0 {
            out[m + k - 1] = z.im;
        }
    }
    out
}

/// `b = real(W sigma_hat - N0 [W]_{11} e_1)`, `A = real([W psi_1, ..., W psi_G])`.
pub fn build_nnls_problem(sigma_hat: &[C64], atoms: &[Vec<C64>], n0: f64) -> Result<NnlsProblem> {
    let m = sigma_hat.len();
    if m == 0 {
        return Err(AsfError::Dimension("empty sigma_hat".into()));
    }
    if atoms.is_empty() {
        return Err(AsfError::Dimension("no atoms".into()));
    }
    if let Some((g, atom)) = atoms.iter().enumerate().find(|(_, a)| a.len() != m) {
        return Err(AsfError::Dimension(format!("atom {g} has length {}, expected {m}", atom.len())));
    }
    if n0.is_nan() || n0 < 0.0 {
        return Err(AsfError::Domain(format!("noise power {n0} must be >= 0")));
    }
    let w = weight_matrix(m);
    let weighted = |v: &[C64]| -> Vec<C64> { v.iter().zip(&w).map(|(z, wk)| z * *wk).collect() };

    let mut rhs = weighted(sigma_hat);
    rhs[0] -= C64::new(n0 * w[0], 0.0);
    let b = real_stack(&rhs);

    let mut a = DMatrix::zeros(2 * m - 1, atoms.len());
    for (g, atom) in atoms.iter().enumerate() {
        a.set_column(g, &real_stack(&weighted(atom)));
    }
    Ok(NnlsProblem { a, b, array_size: m, grid_size: atoms.len(), noise_power: n0 })
}

/// Builds the problem for the unit-height pulse dictionary of `grid`.
pub fn build_grid_problem(sigma_hat: &[C64], grid: &AngularGrid, n0: f64) -> Result<NnlsProblem> {
    let m = sigma_hat.len();
    let atoms = (0..grid.len())
        .map(|g| atom_first_column(g, grid, m))
        .collect::<Result<Vec<_>>>()?;
    build_nnls_problem(sigma_hat, &atoms, n0)
}

/// Expected norm of the weighted, stacked estimation error `W (sigma_hat - sigma)`
/// when `sigma_hat` is the Toeplitzified sample covariance of `t` circular
/// Gaussian snapshots with covariance first column `sigma`:
/// `E|e_k|^2 = sum_{l,l' < M-k} |sigma_{l-l'}|^2 / (T (M-k)^2)`.
pub fn toeplitz_noise_level(sigma: &[C64], t: usize) -> f64 {
    let m = sigma.len();
    if t == 0 || m == 0 {
        return 0.0;
    }
    let w = weight_matrix(m);
    // power[d] = |sigma_d|^2 with d = |l - l'|
    let power: Vec<f64> = sigma.iter().map(|z| z.norm_sqr()).collect();
    let mut total = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let n = m - k;
        // sum over l, l' < n of power[|l - l'|]
        let pairs: f64 = n as f64 * power[0]
            + power[1..n].iter().enumerate().map(|(i, p)| 2.0 * (n - 1 - i) as f64 * p).sum::<f64>();
        total += wk * wk * pairs / (t as f64 * (n * n) as f64);
    }
    total.sqrt()
}

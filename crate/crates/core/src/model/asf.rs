use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::AngularGrid;
use super::toeplitz::ToeplitzCovariance;
use crate::error::{AsfError, Result};
use crate::linalg::sinc;
use crate::C64;

const MASS_SUM_TOL: f64 = 1e-9;
const QUAD_TOL: f64 = 1e-12;

type ShapeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Amplitude profile of a cluster over its support.
#[derive(Clone)]
pub enum Profile {
    /// Constant amplitude `mass / width`.
    Flat,
    /// Relative amplitude as a function of the normalized position
    /// `t in [0, 1]` across the support. Rescaled internally so that the
    /// cluster integrates to its mass.
    Shaped(ShapeFn),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Flat => write!(f, "Flat"),
            Profile::Shaped(_) => write!(f, "Shaped(..)"),
        }
    }
}

/// One scattering cluster: support `[start, end]` carrying `mass`.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub start: f64,
    pub end: f64,
    pub mass: f64,
    pub profile: Profile,
}

impl Cluster {
    pub fn flat(start: f64, end: f64, mass: f64) -> Self {
        Self { start, end, mass, profile: Profile::Flat }
    }

    pub fn shaped<F>(start: f64, end: f64, mass: f64, shape: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { start, end, mass, profile: Profile::Shaped(Arc::new(shape)) }
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    fn shape_norm(shape: &ShapeFn) -> f64 {
        adaptive_simpson(&|t| shape(t), 0.0, 1.0, QUAD_TOL)
    }

    /// Density value at `xi` (zero outside the support).
    pub fn density(&self, xi: f64) -> f64 {
        if xi < self.start || xi > self.end {
            return 0.0;
        }
        match &self.profile {
            Profile::Flat => self.mass / self.width(),
            Profile::Shaped(shape) => {
                let t = (xi - self.start) / self.width();
                self.mass * shape(t) / (self.width() * Self::shape_norm(shape))
            }
        }
    }

    /// `int_{lo}^{hi} gamma_k(xi) dxi`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let a = lo.max(self.start);
        let b = hi.min(self.end);
        if b <= a {
            return 0.0;
        }
        match &self.profile {
            Profile::Flat => self.mass * (b - a) / self.width(),
            Profile::Shaped(shape) => {
                let ta = (a - self.start) / self.width();
                let tb = (b - self.start) / self.width();
                self.mass * adaptive_simpson(&|t| shape(t), ta, tb, QUAD_TOL) / Self::shape_norm(shape)
            }
        }
    }

    /// Fourier moment `int gamma_k(xi) e^{j pi r xi} dxi`.
    pub fn moment(&self, r: i64) -> C64 {
        let r = r as f64;
        match &self.profile {
            Profile::Flat => {
                C64::from_polar(self.mass * sinc(r * self.width() / 2.0), PI * r * self.center())
            }
            Profile::Shaped(shape) => {
                let norm = Self::shape_norm(shape);
                let (s, w) = (self.start, self.width());
                let re = adaptive_simpson(&|t| shape(t) * (PI * r * (s + w * t)).cos(), 0.0, 1.0, QUAD_TOL);
                let im = adaptive_simpson(&|t| shape(t) * (PI * r * (s + w * t)).sin(), 0.0, 1.0, QUAD_TOL);
                C64::new(re, im) * (self.mass / norm)
            }
        }
    }
}

/// Ground-truth ASF made of `K` disjoint clusters on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GroupSparseAsf {
    clusters: Vec<Cluster>,
}

impl GroupSparseAsf {
    /// Validates the clusters and sorts them by start. Total mass is kept
    /// as given; see [`GroupSparseAsf::normalized`].
    pub fn new(mut clusters: Vec<Cluster>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(AsfError::InvalidAsf("no clusters".into()));
        }
        for c in &clusters {
            if !(c.start.is_finite() && c.end.is_finite() && c.mass.is_finite()) {
                return Err(AsfError::InvalidAsf("non-finite cluster parameter".into()));
            }
            if c.start < -1.0 || c.end > 1.0 {
                return Err(AsfError::InvalidAsf(format!(
                    "support [{}, {}] not inside [-1, 1]",
                    c.start, c.end
                )));
            }
            if c.width() <= 0.0 {
                return Err(AsfError::InvalidAsf(format!("empty support [{}, {}]", c.start, c.end)));
            }
            if c.mass < 0.0 {
                return Err(AsfError::InvalidAsf(format!("negative mass {}", c.mass)));
            }
            if let Profile::Shaped(shape) = &c.profile {
                if Cluster::shape_norm(shape) <= 0.0 {
                    return Err(AsfError::InvalidAsf("shape profile integrates to zero".into()));
                }
            }
        }
        clusters.sort_by(|a, b| a.start.total_cmp(&b.start));
        for pair in clusters.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(AsfError::InvalidAsf(format!(
                    "supports [{}, {}] and [{}, {}] overlap",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        if clusters.iter().map(|c| c.mass).sum::<f64>() <= 0.0 {
            return Err(AsfError::InvalidAsf("total mass is zero".into()));
        }
        Ok(Self { clusters })
    }

    /// Same ASF rescaled to unit total mass.
    pub fn normalized(&self) -> Self {
        let total = self.total_mass();
        let clusters = self
            .clusters
            .iter()
            .map(|c| Cluster { mass: c.mass / total, ..c.clone() })
            .collect();
        Self { clusters }
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.clusters.iter().map(|c| c.mass).sum()
    }

    pub fn density(&self, xi: f64) -> f64 {
        self.clusters.iter().map(|c| c.density(xi)).sum()
    }

    /// `sigma_r = int gamma(xi) e^{j pi r xi} dxi` for any integer lag.
    pub fn moment(&self, r: i64) -> C64 {
        self.clusters.iter().map(|c| c.moment(r)).sum()
    }

    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.clusters.iter().map(|c| c.mass_between(lo, hi)).sum()
    }

    pub fn to_file(&self) -> Result<AsfFile> {
        let clusters = self
            .clusters
            .iter()
            .map(|c| match c.profile {
                Profile::Flat => Ok(ClusterSpec { start: c.start, end: c.end, mass: c.mass }),
                Profile::Shaped(_) => {
                    Err(AsfError::InvalidAsf("only flat profiles can be serialized".into()))
                }
            })
            .collect::<Result<_>>()?;
        Ok(AsfFile { clusters })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: AsfFile = serde_json::from_str(&text)?;
        file.into_asf()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file()?)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk ASF description: `{"clusters":[{"start":..,"end":..,"mass":..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsfFile {
    pub clusters: Vec<ClusterSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub start: f64,
    pub end: f64,
    pub mass: f64,
}

impl AsfFile {
    /// Converts to a rectangular-profile ASF; masses must sum to one.
    pub fn into_asf(self) -> Result<GroupSparseAsf> {
        let total: f64 = self.clusters.iter().map(|c| c.mass).sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(AsfError::InvalidAsf(format!("cluster masses sum to {total}, expected 1")));
        }
        GroupSparseAsf::new(
            self.clusters.into_iter().map(|c| Cluster::flat(c.start, c.end, c.mass)).collect(),
        )
    }
}

/// Toeplitz covariance `sigma_r`, `r = 0..M`, of the ASF.
pub fn asf_to_covariance(asf: &GroupSparseAsf, m: usize) -> ToeplitzCovariance {
    let col: Vec<C64> = (0..m as i64).map(|r| asf.moment(r)).collect();
    ToeplitzCovariance::from_moments(col)
}

/// Cell masses of the ASF on `grid`, renormalized to unit sum.
pub fn grid_sample_asf(asf: &GroupSparseAsf, grid: &AngularGrid) -> Vec<f64> {
    let mut gamma: Vec<f64> = (0..grid.len())
        .map(|g| grid.cell_pieces(g).into_iter().map(|(a, b)| asf.mass_between(a, b)).sum())
        .collect();
    let total: f64 = gamma.iter().sum();
    if total > 0.0 {
        gamma.iter_mut().for_each(|v| *v /= total);
    }
    gamma
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    // Split first so oscillatory integrands are not fooled by a lucky
    // coarse estimate.
    const PIECES: usize = 16;
    let h = (b - a) / PIECES as f64;
    (0..PIECES)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (flo, fhi) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(f, lo, flo, hi, fhi);
            recurse(f, lo, flo, hi, fhi, m, fm, whole, tol / PIECES as f64, 40)
        })
        .sum()
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{L2ProjOptions, SpiceOptions};
use crate::error::{AsfError, Result};
use crate::estimators::{default_p0, Method};

fn default_t_over_m() -> Vec<usize> {
    vec![2, 4, 8]
}
fn default_snr() -> Option<f64> {
    Some(20.0)
}
fn default_clusters() -> [usize; 2] {
    [1, 4]
}
fn default_width_bound() -> f64 {
    0.3
}
fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}
fn default_methods() -> Vec<Method> {
    vec![Method::Nnls, Method::Gnnls, Method::Spice, Method::Burg, Method::L2proj]
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

/// Monte Carlo experiment description, read from JSON.
///
/// `snr_db` is the per-antenna signal power over noise power; the ASF has unit
/// mass so `N0 = 10^(-snr/10)`. `null` means noiseless. `K` is an inclusive
/// range of cluster counts drawn per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "M")]
    pub array_size: usize,
    #[serde(rename = "G")]
    pub grid_size: usize,
    #[serde(rename = "T_over_M", default = "default_t_over_m")]
    pub t_over_m: Vec<usize>,
    #[serde(default = "default_snr")]
    pub snr_db: Option<f64>,
    #[serde(rename = "K", default = "default_clusters")]
    pub clusters: [usize; 2],
    #[serde(default = "default_width_bound")]
    pub width_bound: f64,
    /// Maximum pulse width; `None` uses `max(2, ceil(G/M))`.
    #[serde(default)]
    pub p0: Option<usize>,
    /// Candidate penalties as multiples of `||Phi^T b||_inf`; `None` uses a
    /// quarter-decade grid over `[1e-6, 1]` plus zero.
    #[serde(default)]
    pub varsigma_prime: Option<Vec<f64>>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Replace the sample estimate by the exact moments (infinite `T`).
    #[serde(default)]
    pub exact_moments: bool,
    #[serde(default)]
    pub burg_order: Option<usize>,
    #[serde(default)]
    pub spice: SpiceOptions,
    #[serde(default)]
    pub l2proj: L2ProjOptions,
    /// Write per-run estimate CSVs and plot panels (metrics are always written).
    #[serde(default = "default_true")]
    pub write_estimates: bool,
}

impl ExperimentConfig {
    /// Minimal config with defaults for everything but the array and grid.
    pub fn new(array_size: usize, grid_size: usize) -> Self {
        Self {
            array_size,
            grid_size,
            t_over_m: default_t_over_m(),
            snr_db: default_snr(),
            clusters: default_clusters(),
            width_bound: default_width_bound(),
            p0: None,
            varsigma_prime: None,
            seeds: default_seeds(),
            methods: default_methods(),
            output_dir: default_output(),
            exact_moments: false,
            burg_order: None,
            spice: SpiceOptions::default(),
            l2proj: L2ProjOptions::default(),
            write_estimates: true,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Noise power for a unit-power signal.
    pub fn noise_power(&self) -> f64 {
        self.snr_db.map_or(0.0, |snr| 10f64.powf(-snr / 10.0))
    }

    pub fn max_pulse_width(&self) -> usize {
        self.p0.unwrap_or_else(|| default_p0(self.grid_size, self.array_size))
    }

    /// Relative penalty candidates.
    pub fn sweep(&self) -> Vec<f64> {
        self.varsigma_prime.clone().unwrap_or_else(|| {
            std::iter::once(0.0).chain((0..=24).map(|i| 10f64.powf(-6.0 + 0.25 * i as f64))).collect()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(AsfError::Config(msg));
        if self.array_size == 0 {
            return fail("M must be >= 1".into());
        }
        if self.grid_size < 2 {
            return fail("G must be >= 2".into());
        }
        if self.t_over_m.is_empty() || self.t_over_m.contains(&0) {
            return fail("T_over_M must be a non-empty list of positive integers".into());
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return fail(format!("snr_db {snr} must be finite (use null for noiseless)"));
            }
        }
        let [k_min, k_max] = self.clusters;
        if k_min == 0 || k_min > k_max {
            return fail(format!("K range [{k_min}, {k_max}] must satisfy 1 <= min <= max"));
        }
        if !(self.width_bound > 0.0 && self.width_bound < 2.0 / k_max as f64) {
            return fail(format!("width_bound {} outside (0, 2/K_max)", self.width_bound));
        }
        let p0 = self.max_pulse_width();
        if p0 == 0 || p0 > self.grid_size {
            return fail(format!("p0 = {p0} outside [1, G]"));
        }
        if self.sweep().is_empty() || self.sweep().iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return fail("varsigma_prime must be a non-empty list of finite values >= 0".into());
        }
        if self.seeds.is_empty() {
            return fail("seeds must be non-empty".into());
        }
        if self.methods.is_empty() {
            return fail("methods must be non-empty".into());
        }
        if self.methods.contains(&Method::L2proj) && self.grid_size < 4 * self.array_size {
            return fail("l2proj needs G >= 4M".into());
        }
        if let Some(p) = self.burg_order {
            if p + 1 > self.array_size {
                return fail(format!("burg_order {p} exceeds M - 1"));
            }
        }
        Ok(())
    }
}

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::covariance::{parse_floats, sidecar_path};
use crate::error::{AsfError, Result};
use crate::model::AngularGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nnls,
    Gnnls,
    Spice,
    Burg,
    L2proj,
    Dnn,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Nnls => "nnls",
            Method::Gnnls => "gnnls",
            Method::Spice => "spice",
            Method::Burg => "burg",
            Method::L2proj => "l2proj",
            Method::Dnn => "dnn",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = AsfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nnls" => Ok(Method::Nnls),
            "gnnls" => Ok(Method::Gnnls),
            "spice" => Ok(Method::Spice),
            "burg" => Ok(Method::Burg),
            "l2proj" => Ok(Method::L2proj),
            "dnn" => Ok(Method::Dnn),
            other => Err(AsfError::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Solver metadata written next to every estimate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kkt_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub varsigma_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Nonnegative grid estimate of the ASF.
#[derive(Debug, Clone, PartialEq)]
pub struct AsfEstimate {
    pub gamma: Vec<f64>,
    pub method: Method,
    pub diagnostics: Diagnostics,
    /// Dictionary coefficients (generalized NNLS only); `gamma = D alpha`.
    pub alpha: Option<Vec<f64>>,
}

impl AsfEstimate {
    /// `gamma / sum(gamma)`; all-zero estimates are returned unchanged.
    pub fn normalized_gamma(&self) -> Vec<f64> {
        normalize(&self.gamma)
    }

    /// Writes `xi,gamma` rows and a JSON diagnostics sidecar.
    pub fn save_csv(&self, path: &Path, grid: &AngularGrid) -> Result<()> {
        if grid.len() != self.gamma.len() {
            return Err(AsfError::Dimension("grid and estimate sizes differ".into()));
        }
        let mut out = String::from("xi,gamma\n");
        for (xi, v) in grid.points().iter().zip(&self.gamma) {
            writeln!(out, "{xi},{v}").expect("write to string");
        }
        std::fs::write(path, out)?;
        let sidecar = EstimateSidecar { method: self.method, diagnostics: self.diagnostics.clone() };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Reads an estimate CSV. The diagnostics sidecar is optional so that
    /// externally produced estimates can be scored; `method` is used when it
    /// is missing.
    pub fn load_csv(path: &Path, method: Method) -> Result<(Vec<f64>, Self)> {
        let text = std::fs::read_to_string(path)?;
        let mut xi = Vec::new();
        let mut gamma = Vec::new();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let vals = parse_floats(line)?;
            if vals.len() != 2 {
                return Err(AsfError::Parse(format!("expected xi,gamma, got {line:?}")));
            }
            xi.push(vals[0]);
            gamma.push(vals[1]);
        }
        let side = sidecar_path(path);
        let (method, diagnostics) = if side.exists() {
            let s: EstimateSidecar = serde_json::from_str(&std::fs::read_to_string(side)?)?;
            (s.method, s.diagnostics)
        } else {
            (method, Diagnostics::default())
        };
        Ok((xi, AsfEstimate { gamma, method, diagnostics, alpha: None }))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimateSidecar {
    method: Method,
    diagnostics: Diagnostics,
}

pub(crate) fn normalize(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter().map(|x| x / total).collect()
    } else {
        v.to_vec()
    }
}

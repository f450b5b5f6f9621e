//! Classical comparison estimators producing unit-sum grid densities:
//! Burg maximum entropy (Levinson-Durbin on the Toeplitz moments), the
//! l2-norm projection method, and SPICE covariance fitting.

mod burg;
mod l2proj;
mod spice;

use serde::{Deserialize, Serialize};

pub use burg::{ar_density, estimate_burg, levinson_durbin, ArModel};
pub use l2proj::{estimate_l2_projection, grid_moments, l2_projection_density, L2ProjOptions};
pub use spice::{estimate_spice, spice_fit, SpiceFit, SpiceOptions};

use crate::error::{AsfError, Result};

/// Per-method configuration of the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum BaselineConfig {
    Spice(SpiceOptions),
    Burg {
        /// AR order; `None` means `M - 1`.
        order: Option<usize>,
    },
    L2proj(L2ProjOptions),
}

impl BaselineConfig {
    pub fn validate(&self, array_size: usize) -> Result<()> {
        match self {
            BaselineConfig::Burg { order: Some(p) } if *p + 1 > array_size => Err(AsfError::Config(
                format!("Burg order {p} exceeds M - 1 = {}", array_size.saturating_sub(1)),
            )),
            BaselineConfig::Spice(o) if o.max_iter == 0 => {
                Err(AsfError::Config("SPICE iteration cap must be >= 1".into()))
            }
            BaselineConfig::L2proj(o) if o.max_iter == 0 => {
                Err(AsfError::Config("l2 projection iteration cap must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(BaselineConfig::Burg { order: Some(8) }.validate(8).is_err());
        assert!(BaselineConfig::Burg { order: Some(7) }.validate(8).is_ok());
        assert!(BaselineConfig::Burg { order: None }.validate(8).is_ok());
        let spice = SpiceOptions { max_iter: 0, ..SpiceOptions::default() };
        assert!(BaselineConfig::Spice(spice).validate(8).is_err());
        let json = r#"{"method":"burg","order":3}"#;
        let cfg: BaselineConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg, BaselineConfig::Burg { order: Some(3) });
    }
}

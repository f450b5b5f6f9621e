//! Angular spread function (ASF) estimation for uniform linear arrays.
//!
//! The crate covers the whole chain from a ground-truth group-sparse ASF to
//! grid estimates of it:
//!
//! * [`model`]: angular grid, steering vectors, ASFs and the ASF to
//!   covariance forward map.
//! * [`covariance`]: snapshot simulation, sample covariance,
//!   Toeplitzification and assembly of the weighted NNLS data.
//! * [`nnls`]: a Lawson-Hanson active-set NNLS solver.
//! * [`estimators`]: plain NNLS, the pulse dictionary, the atomic l1 norm and
//!   the group-sparsity promoting generalized NNLS.
//! * [`baselines`]: Burg maximum entropy, l2-norm projection and SPICE.
//! * [`harness`]: scenario generation, metrics and the reproducible
//!   experiment driver used by the `asf` binary.

pub mod baselines;
pub mod covariance;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod nnls;

pub use error::{AsfError, Result};
pub use nalgebra::Complex;

/// Complex scalar used throughout the crate.
pub type C64 = Complex<f64>;

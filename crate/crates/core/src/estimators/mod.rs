//! Dictionary-based ASF estimators: plain NNLS and the group-sparsity
//! promoting generalized NNLS over the rectangular pulse dictionary.

mod atomic;
mod dictionary;
mod estimate;
mod gnnls;

pub use atomic::{atomic_l1_norm, AtomicNorm};
pub use dictionary::{default_p0, Pulse, PulseDictionary};
pub use estimate::{AsfEstimate, Diagnostics, Method};
pub use gnnls::{
    default_sweep, estimate_gnnls, estimate_nnls, l1_certificate, GnnlsSystem, CertificateReport,
    SweepPoint,
};

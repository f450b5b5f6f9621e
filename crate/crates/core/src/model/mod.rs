//! Channel model: angular grid, steering vectors, ground-truth ASFs and the
//! ASF to covariance forward map.

mod asf;
mod grid;
mod toeplitz;

pub use asf::{asf_to_covariance, grid_sample_asf, AsfFile, Cluster, ClusterSpec, GroupSparseAsf, Profile};
pub use grid::{atom_first_column, steering_vector, AngularGrid, SteeringVector};
pub use toeplitz::ToeplitzCovariance;

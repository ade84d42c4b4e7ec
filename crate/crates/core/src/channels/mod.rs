//! Synthetic conditionally Gaussian channels.
//!
//! Each user sees one propagation cluster with a Laplacian angular power
//! density around a uniformly drawn main departure angle. Given the cluster,
//! the channel is `h ~ CN(0, C_delta)`, where `C_delta` is Toeplitz for a ULA
//! and block-Toeplitz with Toeplitz blocks for a URA.

mod covariance;
mod dataset;
mod geometry;
pub mod io;

pub use covariance::{
    cluster_covariance, hermitian_toeplitz, laplacian_grid_weights, sample_channel,
    ClusterParameters, ClusterSampler, DEFAULT_GRID_SIZE, MIN_GRID_SIZE,
};
pub use dataset::{
    generate_dataset, generate_scenarios, normalize_dataset, normalize_scenarios, scale_scenarios, Scenario,
    UserChannel,
};
pub use geometry::ArrayGeometry;

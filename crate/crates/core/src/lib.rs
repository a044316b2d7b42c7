//! Heteroskedastic principal subspace estimation.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! - [`matrix`]: the dense [`Matrix`] carrier, orthonormal bases and corruption sets;
//! - [`linalg`]: deterministic SVD/QR/eigen routines and the structural operators
//!   Δ (off-diagonal), D (diagonal), G/Γ (mask and complement);
//! - [`metrics`]: sinΘ distance and the incoherence constant;
//! - [`estimators`]: HeteroPCA, its corruption-set generalization, the regular and
//!   diagonal-deletion baselines, and the matrix builders that feed them;
//! - [`models`]: seeded generators for the spiked covariance, denoising, Poisson and
//!   missing-data settings;
//! - [`verify`]: brute-force oracles and executable checks of the deterministic lemmas.
//!
//! IO, CSV, plotting and the command line live in the companion `hpca` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimators;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod verify;

pub use error::{Error, Result};
pub use estimators::{HeteroPcaConfig, HeteroPcaResult};
pub use matrix::{CorruptionSet, Matrix, OrthonormalBasis};
pub use models::RngStream;

/// Library version, reported by the CLI as part of the reproducibility contract.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

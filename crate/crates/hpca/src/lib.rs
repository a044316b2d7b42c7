//! Experiment runner, file formats and command line for `hpca-core`.
//!
//! A run is described by an [`ExperimentConfig`], executed by
//! [`run_experiment`], and written with [`output::write_run`]: a trials CSV,
//! its `.agg.csv` summary, a `.timing.csv` with wall-clock times, and
//! optionally an `.svg` plot.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, Method, MissingModel, NoiseProfile, Params};
pub use error::{Error, Result};
pub use runner::{run_experiment, AggregateRecord, RunOutput, Summary, TrialRecord};

/// Library version and RNG algorithm, as printed by `hpca --version`.
pub fn version_string() -> String {
    format!(
        "{} (hpca-core {}; rng: {})",
        env!("CARGO_PKG_VERSION"),
        hpca_core::VERSION,
        hpca_core::models::RNG_ALGORITHM
    )
}

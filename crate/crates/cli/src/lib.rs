//! Experiment driver for beta basis function networks.
//!
//! A config file names a dataset, a split protocol, a noise sweep and the
//! models to compare. [`run_experiment`] runs every (model, noise, run,
//! fold) cell and returns the raw scores with their summaries, which
//! [`ExperimentOutput::write`] saves as CSV.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{parse_config, ExperimentConfig, NoiseLevel};
pub use error::{CliError, Diagnostic, Result};
pub use runner::{load_dataset, run_experiment, ExperimentOutput};

//! Library surface of the experiment driver, kept separate from the binary
//! so integration tests can run configs in-process.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{load, validate, ConfigError, ExperimentConfig};
pub use experiments::{describe_experiments, run, RunError};

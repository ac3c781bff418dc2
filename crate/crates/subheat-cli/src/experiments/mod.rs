//! Experiment dispatch: each kind consumes its config, writes artifacts
//! under the output directory and reports pass/fail gates.

mod contraction;
mod kernels;
mod moments;
mod norms;
mod pde;
mod smoothing;
mod subordinate;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::Report;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Numerics(String),
}

macro_rules! from_numerics {
    ($($ty:ty),*) => {
        $(impl From<$ty> for RunError {
            fn from(e: $ty) -> Self {
                RunError::Numerics(e.to_string())
            }
        })*
    };
}
from_numerics!(
    subheat::grid::GridError,
    subheat::bernstein::BernsteinError,
    subheat::semigroup::SemigroupError,
    subheat::subordinator::SubordinatorError,
    subheat::norms::NormError,
    subheat::smoothing::SmoothingError,
    subheat::pde::PdeError
);

/// Runs one experiment; returns whether all gates passed.
pub fn run(config: &ExperimentConfig, output_root: Option<&Path>) -> Result<bool, RunError> {
    let dir = resolve_output_dir(config.output_dir(), output_root);
    println!("experiment '{}' -> {}", config.kind_name(), dir.display());
    let report = Report::create(&dir)?;
    let pass = match config {
        ExperimentConfig::Moments { config, .. } => moments::run(config, report)?,
        ExperimentConfig::Subordinate { config, .. } => subordinate::run(config, report)?,
        ExperimentConfig::Kernels { config, .. } => kernels::run(config, report)?,
        ExperimentConfig::Norms { config, .. } => norms::run(config, report)?,
        ExperimentConfig::Contraction { config, .. } => contraction::run(config, report)?,
        ExperimentConfig::Smoothing { config, .. } => smoothing::run(config, report)?,
        ExperimentConfig::Pde { config, .. } => pde::run(config, report)?,
    };
    Ok(pass)
}

/// Output directory: the config's path, optionally re-rooted (relative
/// paths only) by `--output-root` or the `SUBHEAT_OUTPUT_DIR` env var.
fn resolve_output_dir(configured: &str, root: Option<&Path>) -> PathBuf {
    let configured = PathBuf::from(configured);
    match root {
        Some(root) if configured.is_relative() => root.join(configured),
        _ => configured,
    }
}

/// The shipped experiment kinds with one-line descriptions.
pub fn describe_experiments() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "moments",
            "negative stable moments: closed form vs quadrature oracle, optional MC column and moment sandwich",
        ),
        (
            "subordinate",
            "Monte Carlo subordination: Laplace-transform identity or field-level comparison with the multiplier route",
        ),
        (
            "kernels",
            "kernel fixtures: Cauchy-Poisson reference values, positivity probes, kernel mass",
        ),
        ("norms", "Besov/Triebel-Lizorkin norm tables for a field family"),
        (
            "contraction",
            "max ||W_t u|| / ||u|| over a norm suite, time grid and field family",
        ),
        (
            "smoothing",
            "caloric smoothing ratios: log-log exponent fits and calibrated-constant bounds",
        ),
        (
            "pde",
            "mild-solution solver for du/dt + (-Delta)^beta u = div[u^2] with residual and RK4-oracle gates",
        ),
    ]
}

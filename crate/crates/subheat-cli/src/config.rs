//! JSON experiment configs.
//!
//! Every experiment is one JSON object tagged by `"experiment"`; grids,
//! Bernstein families, semigroup kinds, norms and test fields are shared
//! sub-objects. `p`/`q`/`a` accept either a number or the string `"inf"`.

use serde::Deserialize;
use thiserror::Error;

use subheat::bernstein::BernsteinFunction;
use subheat::fields;
use subheat::grid::{GridError, SpectralField, TorusGrid};
use subheat::norms::{NormScale, NormSpec};
use subheat::pde::WeightedNormSpec;
use subheat::semigroup::SemigroupKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A number or `"inf"`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Extended {
    Num(f64),
    Word(ExtendedWord),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtendedWord {
    Inf,
    Infinity,
}

impl Extended {
    pub fn value(&self) -> f64 {
        match self {
            Extended::Num(v) => *v,
            Extended::Word(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points_per_axis: usize,
    /// Box half-length as a multiple of pi (`64.0` means `L = 64 pi`).
    pub box_half_length_pi: Option<f64>,
    /// Box half-length directly.
    pub box_half_length: Option<f64>,
}

impl GridConfig {
    pub fn build(&self) -> Result<TorusGrid, ConfigError> {
        let half = match (self.box_half_length_pi, self.box_half_length) {
            (Some(m), None) => m * std::f64::consts::PI,
            (None, Some(l)) => l,
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "grid needs box_half_length_pi or box_half_length".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "grid has both box_half_length_pi and box_half_length".into(),
                ))
            }
        };
        Ok(TorusGrid::new(self.dim, self.points_per_axis, half)?)
    }
}

/// `{"family": "stable", "alpha": 0.5}`-style Bernstein descriptors.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Stable { alpha: f64 },
    StableLevy { alpha: f64 },
    Relativistic { alpha: f64, c: f64 },
    Log1p,
    Drift,
    Power { beta: f64 },
}

impl FamilyConfig {
    pub fn build(&self) -> BernsteinFunction {
        match self {
            FamilyConfig::Stable { alpha } => BernsteinFunction::stable(*alpha),
            FamilyConfig::StableLevy { alpha } => BernsteinFunction::stable_from_levy(*alpha),
            FamilyConfig::Relativistic { alpha, c } => BernsteinFunction::relativistic(*alpha, *c),
            FamilyConfig::Log1p => BernsteinFunction::log1p(),
            FamilyConfig::Drift => BernsteinFunction::drift(),
            FamilyConfig::Power { beta } => BernsteinFunction::power(*beta),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SemigroupConfig {
    GaussWeierstrass,
    Subordinated { family: FamilyConfig },
    Power { beta: f64 },
}

impl SemigroupConfig {
    pub fn build(&self) -> SemigroupKind {
        match self {
            SemigroupConfig::GaussWeierstrass => SemigroupKind::GaussWeierstrass,
            SemigroupConfig::Subordinated { family } => {
                SemigroupKind::Subordinated(family.build())
            }
            SemigroupConfig::Power { beta } => SemigroupKind::GeneralizedPower { beta: *beta },
        }
    }

    /// The exponent governing the smoothing rate: `alpha` for stable
    /// symbols, `beta` for generalized powers, 1 for the heat semigroup.
    pub fn rate_exponent(&self) -> Option<f64> {
        match self {
            SemigroupConfig::GaussWeierstrass => Some(1.0),
            SemigroupConfig::Power { beta } => Some(*beta),
            SemigroupConfig::Subordinated { family } => match family {
                FamilyConfig::Stable { alpha } | FamilyConfig::StableLevy { alpha } => {
                    Some(*alpha)
                }
                FamilyConfig::Drift => Some(1.0),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    pub scale: String,
    pub s: f64,
    pub p: Extended,
    pub q: Extended,
}

impl NormConfig {
    pub fn build(&self) -> Result<NormSpec, ConfigError> {
        let scale = match self.scale.as_str() {
            "B" | "b" | "besov" => NormScale::Besov,
            "F" | "f" | "triebel" => NormScale::Triebel,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown norm scale '{other}' (use B or F)"
                )))
            }
        };
        let spec = NormSpec {
            scale,
            s: self.s,
            p: self.p.value(),
            q: self.q.value(),
        };
        spec.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }
}

/// Test fields: explicit members or a seeded batch of band noise.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    Gaussian { sigma: f64 },
    Bump { radius: f64 },
    Cosine { modes: [i64; 2] },
    Sine { modes: [i64; 2] },
    BandNoise {
        xi_lo: f64,
        xi_hi: f64,
        decay: f64,
        seed: u64,
    },
    NoiseBatch {
        count: usize,
        xi_lo: f64,
        xi_hi: f64,
        decay: f64,
        seed: u64,
    },
}

impl FieldConfig {
    pub fn build(&self, grid: TorusGrid) -> Vec<(String, SpectralField)> {
        match self {
            FieldConfig::Gaussian { sigma } => {
                vec![(format!("gaussian[{sigma}]"), fields::gaussian(grid, *sigma))]
            }
            FieldConfig::Bump { radius } => {
                vec![(format!("bump[{radius}]"), fields::bump(grid, *radius))]
            }
            FieldConfig::Cosine { modes } => vec![(
                format!("cosine[{},{}]", modes[0], modes[1]),
                fields::cosine_mode(grid, *modes),
            )],
            FieldConfig::Sine { modes } => vec![(
                format!("sine[{},{}]", modes[0], modes[1]),
                fields::sine_mode(grid, *modes),
            )],
            FieldConfig::BandNoise {
                xi_lo,
                xi_hi,
                decay,
                seed,
            } => vec![(
                format!("noise[{seed}]"),
                fields::band_noise(grid, *xi_lo, *xi_hi, *decay, *seed),
            )],
            FieldConfig::NoiseBatch {
                count,
                xi_lo,
                xi_hi,
                decay,
                seed,
            } => (0..*count)
                .map(|i| {
                    (
                        format!("noise[{}]", seed + i as u64),
                        fields::band_noise(grid, *xi_lo, *xi_hi, *decay, seed + i as u64),
                    )
                })
                .collect(),
        }
    }
}

pub fn build_fields(
    configs: &[FieldConfig],
    grid: TorusGrid,
) -> Vec<(String, SpectralField)> {
    configs.iter().flat_map(|c| c.build(grid)).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedNormConfig {
    pub a: Extended,
    pub b: f64,
    pub norm: NormConfig,
}

impl WeightedNormConfig {
    pub fn build(&self) -> Result<WeightedNormSpec, ConfigError> {
        Ok(WeightedNormSpec {
            a: self.a.value(),
            b: self.b,
            norm: self.norm.build()?,
        })
    }
}

fn default_tolerance_rel() -> f64 {
    1e-8
}

fn default_window_frac() -> f64 {
    0.6
}

fn default_oversample() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichConfig {
    pub families: Vec<FamilyConfig>,
    pub r_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub alpha_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    #[serde(default = "default_tolerance_rel")]
    pub tolerance_rel: f64,
    /// Optional Monte Carlo column (draw count; 0 disables).
    #[serde(default)]
    pub mc_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sandwich: Option<SandwichConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SubordinateConfig {
    /// Monte Carlo Laplace-transform identity `E e^{-l S_t} = e^{-t l^a}`.
    Laplace {
        alpha_grid: Vec<f64>,
        lambda_grid: Vec<f64>,
        t: f64,
        count: usize,
        seed: u64,
    },
    /// MC-subordinated field against the exact multiplier route.
    Field {
        grid: GridConfig,
        field: FieldConfig,
        alpha: f64,
        t: f64,
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum KernelCheckConfig {
    /// Kernel of the Cauchy-Poisson semigroup against `t / (pi (t^2+x^2))`.
    PoissonReference {
        grid: GridConfig,
        t_values: Vec<f64>,
        tolerance_abs: f64,
    },
    /// Positivity probe: `expect` is `"nonnegative"` (min >= -threshold)
    /// or `"sign_changing"` (min < -threshold).
    Positivity {
        grid: GridConfig,
        semigroup: SemigroupConfig,
        t: f64,
        expect: String,
        threshold: f64,
    },
    /// Kernel mass `int K = 1` within tolerance.
    Mass {
        grid: GridConfig,
        semigroup: SemigroupConfig,
        t: f64,
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelsConfig {
    pub checks: Vec<KernelCheckConfig>,
    /// Dump extracted kernels as CSV fixtures.
    #[serde(default)]
    pub dump_kernels: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub grid: GridConfig,
    pub fields: Vec<FieldConfig>,
    pub norms: Vec<NormConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionConfig {
    pub grid: GridConfig,
    pub kinds: Vec<SemigroupConfig>,
    pub t_grid: Vec<f64>,
    pub fields: Vec<FieldConfig>,
    /// `"full"` for the whole (scale, s, p, q) suite, else explicit norms.
    #[serde(default)]
    pub norms: Option<Vec<NormConfig>>,
    #[serde(default = "default_contraction_tol")]
    pub tolerance: f64,
}

fn default_contraction_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub grid: GridConfig,
    pub semigroup: SemigroupConfig,
    pub norm_in: NormConfig,
    pub d_values: Vec<f64>,
    pub t_range: [f64; 2],
    pub t_points: usize,
    #[serde(default = "default_window_frac")]
    pub fit_window_frac: f64,
    pub fields: Vec<FieldConfig>,
    /// Check the fitted slope against `-d/(2a)` (needs a rate exponent).
    #[serde(default)]
    pub check_slope: bool,
    /// Check the general-Bernstein bound `[f^{-1}(1/t)]^{-d/2} R <= C'`.
    #[serde(default)]
    pub check_general_bound: Option<FamilyConfig>,
    /// Emit a log-log SVG plot per gain.
    #[serde(default)]
    pub plot: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub grid: GridConfig,
    pub beta: f64,
    pub u0: FieldConfig,
    pub amplitude: f64,
    pub t_final: f64,
    pub time_slices: usize,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default)]
    pub weighted_norm: Option<WeightedNormConfig>,
    /// Compare against the integrating-factor RK4 oracle.
    #[serde(default)]
    pub oracle_tolerance: Option<f64>,
    #[serde(default = "default_oversample")]
    pub oracle_oversample: usize,
    #[serde(default)]
    pub experimental: bool,
}

/// Top-level experiment config.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Moments {
        output_dir: String,
        #[serde(flatten)]
        config: MomentsConfig,
    },
    Subordinate {
        output_dir: String,
        #[serde(flatten)]
        config: SubordinateConfig,
    },
    Kernels {
        output_dir: String,
        #[serde(flatten)]
        config: KernelsConfig,
    },
    Norms {
        output_dir: String,
        #[serde(flatten)]
        config: NormsConfig,
    },
    Contraction {
        output_dir: String,
        #[serde(flatten)]
        config: ContractionConfig,
    },
    Smoothing {
        output_dir: String,
        #[serde(flatten)]
        config: SmoothingConfig,
    },
    Pde {
        output_dir: String,
        #[serde(flatten)]
        config: PdeConfig,
    },
}

impl ExperimentConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentConfig::Moments { .. } => "moments",
            ExperimentConfig::Subordinate { .. } => "subordinate",
            ExperimentConfig::Kernels { .. } => "kernels",
            ExperimentConfig::Norms { .. } => "norms",
            ExperimentConfig::Contraction { .. } => "contraction",
            ExperimentConfig::Smoothing { .. } => "smoothing",
            ExperimentConfig::Pde { .. } => "pde",
        }
    }

    pub fn output_dir(&self) -> &str {
        match self {
            ExperimentConfig::Moments { output_dir, .. }
            | ExperimentConfig::Subordinate { output_dir, .. }
            | ExperimentConfig::Kernels { output_dir, .. }
            | ExperimentConfig::Norms { output_dir, .. }
            | ExperimentConfig::Contraction { output_dir, .. }
            | ExperimentConfig::Smoothing { output_dir, .. }
            | ExperimentConfig::Pde { output_dir, .. } => output_dir,
        }
    }
}

/// Parses a config file; serde_json errors carry line/column diagnostics.
pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let config: ExperimentConfig = serde_json::from_str(&text)?;
    validate(&config)?;
    Ok(config)
}

/// Semantic validation beyond the schema.
pub fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    let positive = |xs: &[f64], what: &str| -> Result<(), ConfigError> {
        if xs.is_empty() || xs.iter().any(|&x| x <= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "{what} must be non-empty and strictly positive"
            )));
        }
        Ok(())
    };
    match config {
        ExperimentConfig::Moments { config, .. } => {
            positive(&config.alpha_grid, "alpha_grid")?;
            if config.alpha_grid.iter().any(|&a| a >= 1.0) {
                return Err(ConfigError::Invalid("alpha_grid must lie in (0,1)".into()));
            }
            positive(&config.r_grid, "r_grid")?;
            positive(&config.t_grid, "t_grid")?;
            if let Some(s) = &config.sandwich {
                positive(&s.r_grid, "sandwich.r_grid")?;
                positive(&s.t_grid, "sandwich.t_grid")?;
                if s.t_grid.iter().any(|&t| t > 1.0) {
                    return Err(ConfigError::Invalid(
                        "sandwich.t_grid must lie in (0, 1]".into(),
                    ));
                }
            }
        }
        ExperimentConfig::Subordinate { config, .. } => match config {
            SubordinateConfig::Laplace {
                alpha_grid, count, ..
            } => {
                positive(alpha_grid, "alpha_grid")?;
                if *count == 0 {
                    return Err(ConfigError::Invalid("count must be positive".into()));
                }
            }
            SubordinateConfig::Field {
                grid, alpha, count, ..
            } => {
                grid.build()?;
                if !(0.0 < *alpha && *alpha < 1.0) {
                    return Err(ConfigError::Invalid("alpha must lie in (0,1)".into()));
                }
                if *count < 100 {
                    return Err(ConfigError::Invalid("count must be at least 100".into()));
                }
            }
        },
        ExperimentConfig::Kernels { config, .. } => {
            for check in &config.checks {
                match check {
                    KernelCheckConfig::PoissonReference { grid, t_values, .. } => {
                        grid.build()?;
                        positive(t_values, "t_values")?;
                    }
                    KernelCheckConfig::Positivity { grid, expect, .. } => {
                        grid.build()?;
                        if expect != "nonnegative" && expect != "sign_changing" {
                            return Err(ConfigError::Invalid(format!(
                                "expect must be nonnegative or sign_changing, got {expect}"
                            )));
                        }
                    }
                    KernelCheckConfig::Mass { grid, .. } => {
                        grid.build()?;
                    }
                }
            }
        }
        ExperimentConfig::Norms { config, .. } => {
            config.grid.build()?;
            for n in &config.norms {
                n.build()?;
            }
        }
        ExperimentConfig::Contraction { config, .. } => {
            config.grid.build()?;
            positive(&config.t_grid, "t_grid")?;
            if let Some(norms) = &config.norms {
                for n in norms {
                    n.build()?;
                }
            }
        }
        ExperimentConfig::Smoothing { config, .. } => {
            config.grid.build()?;
            config.norm_in.build()?;
            if config.t_range[0] <= 0.0 || config.t_range[1] > 1.0 + 1e-12 {
                return Err(ConfigError::Invalid("t_range must lie in (0, 1]".into()));
            }
            if config.t_points < 2 {
                return Err(ConfigError::Invalid("t_points must be >= 2".into()));
            }
            if config.check_slope && config.semigroup.rate_exponent().is_none() {
                return Err(ConfigError::Invalid(
                    "check_slope needs a stable/power semigroup with a rate exponent".into(),
                ));
            }
        }
        ExperimentConfig::Pde { config, .. } => {
            config.grid.build()?;
            if let Some(w) = &config.weighted_norm {
                w.build()?;
            }
            if config.beta < 1.0 && !config.experimental {
                return Err(ConfigError::Invalid(
                    "beta < 1 requires \"experimental\": true".into(),
                ));
            }
        }
    }
    Ok(())
}

//! Contraction and caloric smoothing experiments.
//!
//! For a semigroup kind and a norm `A^s_{p,q}` the laboratory tabulates
//!
//! ```text
//! R(t) = || W_t u | A^{s+d}_{p,q} || / || u | A^s_{p,q} ||
//! ```
//!
//! over a time grid and a family of test fields, fits the log-log slope of
//! the max-over-fields ratio (expected `-d/(2 alpha)` for stable symbols and
//! `-d/(2 beta)` for generalized exponents), and checks the one-sided bounds
//! `R(t) <= c (t^{-d/(2a)} Gamma(1 + d/(2a)) / Gamma(1 + d/2) + 1)` and
//! `[f^{-1}(1/t)]^{-d/2} R(t) <= C'` with constants calibrated on the grid;
//! the content of those checks is that the calibrated constants stay within
//! one order of magnitude across `t`.

use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::bernstein::{BernsteinError, BernsteinFunction};
use crate::grid::{DyadicPartition, GridError, SpectralField};
use crate::norms::{
    block_l2_profile, BlockCache, DyadicCubeSet, NormError, NormScale, NormSpec,
};
use crate::par;
use crate::semigroup::{SemigroupError, SemigroupKind, SemigroupSpec};

#[derive(Debug, Error)]
pub enum SmoothingError {
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
    #[error("field '{0}' has zero norm")]
    ZeroNormField(String),
    #[error("time grid unsuitable: {0}")]
    BadTimeGrid(String),
    #[error("norm outside the contraction range: {0}")]
    UnsupportedNorm(String),
    #[error("doubling condition fails for {0}")]
    DoublingFailure(String),
}

/// One smoothing experiment: a semigroup family over a time grid acting on
/// test fields, measured between `A^s_{p,q}` and `A^{s+d}_{p,q}`.
pub struct SmoothingExperiment {
    pub kind: SemigroupKind,
    pub norm_in: NormSpec,
    pub gain_d: f64,
    pub t_grid: Vec<f64>,
    pub fields: Vec<(String, SpectralField)>,
}

impl SmoothingExperiment {
    fn validate(&self) -> Result<(), SmoothingError> {
        if self.gain_d < 0.0 {
            return Err(SmoothingError::BadTimeGrid("gain d must be >= 0".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| t <= 0.0 || t > 1.0) {
            return Err(SmoothingError::BadTimeGrid(
                "times must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RatioRow {
    pub t: f64,
    pub field: String,
    pub ratio: f64,
}

/// Per-(t, field) ratios plus the max over fields at each time.
#[derive(Debug, Clone)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    pub max_per_t: Vec<(f64, f64)>,
}

/// Closed-form radial symbol `g(|xi|^2)` of a semigroup kind, if available.
fn closed_symbol(kind: &SemigroupKind) -> Option<Box<dyn Fn(f64) -> f64 + Sync + Send + '_>> {
    match kind {
        SemigroupKind::GaussWeierstrass => Some(Box::new(|l| l)),
        SemigroupKind::GeneralizedPower { beta } => {
            let beta = *beta;
            Some(Box::new(move |l: f64| l.powf(beta)))
        }
        SemigroupKind::Subordinated(f) => {
            f.closed_form(1.0)?;
            Some(Box::new(move |l: f64| {
                if l == 0.0 {
                    0.0
                } else {
                    f.closed_form(l).expect("closed form checked above")
                }
            }))
        }
    }
}

/// Tabulates `R(t)` for the experiment.
///
/// Besov norms with `p = 2` are evaluated entirely on the frequency side:
/// the multiplier is folded into the block profile, so no transform is
/// needed per time point. Other norms go through the physical evaluators.
pub fn smoothing_ratio(exp: &SmoothingExperiment) -> Result<RatioTable, SmoothingError> {
    exp.validate()?;
    let spec_in = exp.norm_in;
    spec_in.validate()?;
    let spec_out = NormSpec {
        s: spec_in.s + exp.gain_d,
        ..spec_in
    };

    let mut rows = Vec::new();
    let fast = spec_in.scale == NormScale::Besov && spec_in.p == 2.0;
    for (name, u) in &exp.fields {
        let part = DyadicPartition::build(*u.grid())?;
        if fast {
            if let Some(sym) = closed_symbol(&exp.kind) {
                let hat = u.to_frequency()?;
                let base = block_l2_profile(&hat, &part, |_| 1.0)?;
                let denom = lq_weighted(&base, spec_in.s, spec_in.q);
                if denom == 0.0 {
                    return Err(SmoothingError::ZeroNormField(name.clone()));
                }
                let ts = exp.t_grid.clone();
                let ratios: Vec<Result<f64, NormError>> = par::map_slice(&ts, |&t| {
                    let profile =
                        block_l2_profile(&hat, &part, |l| (-t * sym(l)).exp())?;
                    Ok(lq_weighted(&profile, spec_out.s, spec_out.q) / denom)
                });
                for (t, r) in ts.iter().zip(ratios) {
                    rows.push(RatioRow {
                        t: *t,
                        field: name.clone(),
                        ratio: r?,
                    });
                }
                continue;
            }
        }
        let denom = crate::norms::norm_value(u, &part, &spec_in)?;
        if denom == 0.0 {
            return Err(SmoothingError::ZeroNormField(name.clone()));
        }
        for &t in &exp.t_grid {
            let w = SemigroupSpec::new(exp.kind.clone(), t)?.apply(&u.to_physical()?)?;
            let num = crate::norms::norm_value(&w, &part, &spec_out)?;
            rows.push(RatioRow {
                t,
                field: name.clone(),
                ratio: num / denom,
            });
        }
    }

    let mut max_per_t: Vec<(f64, f64)> = exp
        .t_grid
        .iter()
        .map(|&t| {
            let max = rows
                .iter()
                .filter(|r| r.t == t)
                .map(|r| r.ratio)
                .fold(0.0f64, f64::max);
            (t, max)
        })
        .collect();
    max_per_t.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(RatioTable { rows, max_per_t })
}

fn lq_weighted(profile: &[f64], s: f64, q: f64) -> f64 {
    let weighted: Vec<f64> = profile
        .iter()
        .enumerate()
        .map(|(k, a)| (2f64).powf(k as f64 * s) * a)
        .collect();
    let max = weighted.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return max;
    }
    let sum: f64 = weighted.iter().map(|&v| (v / max).powf(q)).sum();
    max * sum.powf(1.0 / q)
}

/// Report of a contraction run over several norms.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub rows: Vec<(String, f64, String, f64)>, // (norm label, t, field, ratio)
    pub max_ratio: f64,
}

/// Checks `|| W_t u || <= || u ||` for every norm in `specs` over the time
/// grid and fields; block decompositions are shared across norms.
///
/// The admissible ranges follow the contraction theorem: `B`-scale with
/// `p >= 1` and any `q > 0`, `F`-scale with `p, q in [1, inf]`.
pub fn contraction_suite(
    kind: &SemigroupKind,
    t_grid: &[f64],
    specs: &[NormSpec],
    fields: &[(String, SpectralField)],
) -> Result<ContractionReport, SmoothingError> {
    for spec in specs {
        spec.validate()?;
        let ok = match spec.scale {
            NormScale::Besov => spec.p >= 1.0,
            NormScale::Triebel => spec.p >= 1.0 && spec.q >= 1.0,
        };
        if !ok {
            return Err(SmoothingError::UnsupportedNorm(spec.label()));
        }
    }
    if !kind.is_markovian() {
        return Err(SmoothingError::UnsupportedNorm(format!(
            "{} is not positivity preserving",
            kind.label()
        )));
    }

    let mut rows = Vec::new();
    let mut max_ratio = 0.0f64;
    for (name, u) in fields {
        let part = DyadicPartition::build(*u.grid())?;
        let cubes = DyadicCubeSet::build(*u.grid());
        let u_phys = u.to_physical()?;
        let cache_u = BlockCache::build(&u_phys, &part, true)?;
        let base: Vec<f64> = specs
            .iter()
            .map(|spec| eval_from_cache(&cache_u, &cubes, spec))
            .collect::<Result<_, _>>()?;
        if let Some(i) = base.iter().position(|&v| v == 0.0) {
            return Err(SmoothingError::ZeroNormField(format!(
                "{name} in {}",
                specs[i].label()
            )));
        }
        for &t in t_grid {
            let w = SemigroupSpec::new(kind.clone(), t)?.apply(&u_phys)?;
            let cache_w = BlockCache::build(&w, &part, true)?;
            for (spec, denom) in specs.iter().zip(&base) {
                let num = eval_from_cache(&cache_w, &cubes, spec)?;
                let ratio = num / denom;
                max_ratio = max_ratio.max(ratio);
                rows.push((spec.label(), t, name.clone(), ratio));
            }
        }
    }
    Ok(ContractionReport { rows, max_ratio })
}

fn eval_from_cache(
    cache: &BlockCache,
    cubes: &DyadicCubeSet,
    spec: &NormSpec,
) -> Result<f64, NormError> {
    Ok(match spec.scale {
        NormScale::Besov => cache.besov(spec.s, spec.p, spec.q),
        NormScale::Triebel => {
            if spec.p.is_infinite() {
                if spec.q.is_infinite() {
                    cache.triebel_inf_inf(spec.s)
                } else {
                    cache.triebel_inf_q(spec.s, spec.q, cubes)
                }
            } else {
                cache.triebel(spec.s, spec.p, spec.q)?
            }
        }
    })
}

/// The `(scale, s, p, q)` combinations of the contraction suite.
pub fn contraction_norm_suite() -> Vec<NormSpec> {
    let mut specs = Vec::new();
    for &s in &[-1.0, 0.0, 1.5] {
        for &p in &[1.0, 2.0, f64::INFINITY] {
            for &q in &[0.5, 1.0, 2.0, f64::INFINITY] {
                specs.push(NormSpec::besov(s, p, q));
            }
        }
    }
    // F-scale: p < inf from definition (b), p = inf through the cube forms
    for &s in &[-1.0, 0.0, 1.5] {
        for &p in &[1.0, 2.0] {
            for &q in &[1.0, 2.0, f64::INFINITY] {
                specs.push(NormSpec::triebel(s, p, q));
            }
        }
        specs.push(NormSpec::triebel(s, f64::INFINITY, 1.0));
        specs.push(NormSpec::triebel(s, f64::INFINITY, 2.0));
        specs.push(NormSpec::triebel(s, f64::INFINITY, f64::INFINITY));
    }
    specs
}

/// Least-squares fit of `log R` against `log t`.
#[derive(Debug, Clone, Copy)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Set when the ratios were constant and no slope could be estimated.
    pub degenerate: bool,
}

/// Fits the small-`t` portion (`window_frac` of the points) of a max-ratio
/// table on log-log axes.
pub fn exponent_fit(
    max_per_t: &[(f64, f64)],
    window_frac: f64,
) -> Result<ExponentFit, SmoothingError> {
    if max_per_t.len() < 6 {
        return Err(SmoothingError::BadTimeGrid(format!(
            "need at least 6 time points, got {}",
            max_per_t.len()
        )));
    }
    let t_min = max_per_t.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let t_max = max_per_t.iter().map(|r| r.0).fold(0.0f64, f64::max);
    if t_max / t_min < 99.0 {
        return Err(SmoothingError::BadTimeGrid(format!(
            "time grid must span two decades, got {t_min:.3e}..{t_max:.3e}"
        )));
    }
    let mut sorted: Vec<(f64, f64)> = max_per_t.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let take = ((sorted.len() as f64 * window_frac).ceil() as usize).clamp(2, sorted.len());
    let pts: Vec<(f64, f64)> = sorted[..take]
        .iter()
        .map(|&(t, r)| (t.ln(), r.ln()))
        .collect();

    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if syy < 1e-20 {
        return Ok(ExponentFit {
            slope: 0.0,
            intercept: mean_y,
            r_squared: 0.0,
            degenerate: true,
        });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared: 1.0 - ss_res / syy,
        degenerate: false,
    })
}

/// Result of calibrating a one-sided bound `R(t) <= c * shape(t)`.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    /// `R(t) / shape(t)` at each time.
    pub per_t_constant: Vec<(f64, f64)>,
    /// The calibrated constant: max of the per-`t` values.
    pub calibrated: f64,
    /// `max / min` of the per-`t` constants; near-stable values support the
    /// claimed functional form.
    pub stability: f64,
    /// `c * shape(t) - R(t)` at each time (non-negative by calibration).
    pub margins: Vec<(f64, f64)>,
}

fn calibrate_bound(
    max_per_t: &[(f64, f64)],
    shape: impl Fn(f64) -> f64,
) -> BoundCheck {
    let per_t: Vec<(f64, f64)> = max_per_t
        .iter()
        .map(|&(t, r)| (t, r / shape(t)))
        .collect();
    let calibrated = per_t.iter().map(|p| p.1).fold(0.0f64, f64::max);
    let min = per_t.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let margins = max_per_t
        .iter()
        .map(|&(t, r)| (t, calibrated * shape(t) - r))
        .collect();
    BoundCheck {
        per_t_constant: per_t,
        calibrated,
        stability: calibrated / min,
        margins,
    }
}

/// Gamma-ratio bound for fractional powers:
/// `R(t) <= c (t^{-d/(2a)} Gamma(1 + d/(2a))/Gamma(1 + d/2) + 1)`.
pub fn constant_bound_check(a: f64, d: f64, max_per_t: &[(f64, f64)]) -> BoundCheck {
    let ratio = gamma_ratio(a, d);
    calibrate_bound(max_per_t, |t| t.powf(-d / (2.0 * a)) * ratio + 1.0)
}

/// `Gamma(1 + d/(2a)) / Gamma(1 + d/2)`.
pub fn gamma_ratio(a: f64, d: f64) -> f64 {
    gamma(1.0 + d / (2.0 * a)) / gamma(1.0 + d / 2.0)
}

/// General-Bernstein bound: `[f^{-1}(1/t)]^{-d/2} R(t) <= C'`.
///
/// The constant is controlled by the doubling behaviour of `f^{-1}` on
/// `[1, infinity)`: functions whose measured inverse-doubling constant
/// overflows (such as `log(1+l)`, where it is `~e^y`) admit no finite `C'`
/// and are rejected.
pub fn general_f_smoothing_check(
    f: &BernsteinFunction,
    d: f64,
    max_per_t: &[(f64, f64)],
) -> Result<BoundCheck, SmoothingError> {
    let probe: Vec<f64> = (0..48).map(|i| 10f64.powf(-8.0 + i as f64 * 0.2)).collect();
    if !f.doubling_holds_at_zero(&probe, 0.01)? {
        return Err(SmoothingError::DoublingFailure(f.name().into()));
    }
    let c = f.inverse_doubling_constant(1e6)?;
    if !c.is_finite() {
        return Err(SmoothingError::DoublingFailure(format!(
            "{}: inverse doubling constant overflows",
            f.name()
        )));
    }
    let mut shaped = Vec::with_capacity(max_per_t.len());
    for &(t, r) in max_per_t {
        let inv = f.inverse(1.0 / t)?;
        shaped.push((t, r, inv.powf(d / 2.0)));
    }
    Ok(calibrate_bound(
        &shaped.iter().map(|&(t, r, _)| (t, r)).collect::<Vec<_>>(),
        |t| {
            shaped
                .iter()
                .find(|&&(tt, _, _)| tt == t)
                .map(|&(_, _, s)| s)
                .expect("shape tabulated for every t")
        },
    ))
}

/// Log-spaced time grid on `[lo, hi]` (ascending).
pub fn log_time_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    (0..points)
        .map(|i| {
            let frac = i as f64 / (points - 1) as f64;
            lo * (hi / lo).powf(frac)
        })
        .collect()
}

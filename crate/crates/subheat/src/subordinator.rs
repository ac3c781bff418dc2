//! Alpha-stable subordinators and negative-moment formulas.
//!
//! Sampling uses Kanter's transformation: with `U ~ Uniform(0, pi)` and
//! `W ~ Exp(1)`,
//!
//! ```text
//! S_1 = sin(a U) / sin(U)^{1/a} * ( sin((1-a) U) / W )^{(1-a)/a}
//! ```
//!
//! has Laplace transform `E[e^{-l S_1}] = e^{-l^a}`, and
//! `S_t = t^{1/a} S_1` exactly. Draw `i` is a pure function of
//! `(seed, i / CHUNK)` and the position inside its chunk, so batches are
//! reproducible bit-for-bit with any number of worker threads.
//!
//! Negative moments `E[(S_t)^{-r}]` are evaluated twice: through the Gamma
//! closed form and through adaptive quadrature of the Laplace-side integral
//! `(1/Gamma(r)) int_0^inf e^{-t x^a} x^{r-1} dx`; the quadrature route is
//! the oracle for the closed form. For a general Bernstein function the same
//! integral is bracketed by `[f^{-1}(1/t)]^r` bounds (the moment sandwich).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::bernstein::{BernsteinError, BernsteinFunction, Family};
use crate::grid::{GridError, SpectralField};
use crate::par;
use crate::quad::{self, QuadError};
use crate::semigroup::SemigroupError;

#[derive(Debug, Error)]
pub enum SubordinatorError {
    #[error("moment of order kappa = {kappa} does not exist for alpha = {alpha} (needs kappa < alpha)")]
    MomentDomain { kappa: f64, alpha: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error("function {0} is not supported here: {1}")]
    Unsupported(String, String),
}

/// Draws of `S_t^{(alpha)}` together with the parameters that generated them.
#[derive(Debug, Clone)]
pub struct StableSampleBatch {
    pub alpha: f64,
    pub time_t: f64,
    pub seed: u64,
    pub draws: Vec<f64>,
}

const CHUNK: usize = 4096;

fn clamp_open01(u: f64) -> f64 {
    u.clamp(1e-12, 1.0 - 1e-12)
}

fn kanter_draw(alpha: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u = clamp_open01(rng.random::<f64>()) * std::f64::consts::PI;
    let w = -clamp_open01(rng.random::<f64>()).ln();
    let s1 = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let s2 = (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha);
    s1 * s2
}

/// Samples `count` draws of `S_t^{(alpha)}`, scaled from unit time by
/// `t^{1/alpha}`.
pub fn sample_stable(alpha: f64, t: f64, count: usize, seed: u64) -> StableSampleBatch {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    assert!(t > 0.0 && count >= 1);
    let scale = t.powf(1.0 / alpha);
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = par::map_indexed(chunks, |j| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let lo = j * CHUNK;
        let hi = ((j + 1) * CHUNK).min(count);
        (lo..hi).map(|_| scale * kanter_draw(alpha, &mut rng)).collect()
    });
    StableSampleBatch {
        alpha,
        time_t: t,
        seed,
        draws: parts.concat(),
    }
}

/// Empirical mean and standard error of `e^{-lambda S}` over a batch.
pub fn laplace_mean(batch: &StableSampleBatch, lambda: f64) -> (f64, f64) {
    let n = batch.draws.len() as f64;
    let partials: Vec<(f64, f64)> = par::map_slice(
        &batch.draws.chunks(CHUNK).collect::<Vec<_>>(),
        |chunk| {
            let mut s = 0.0;
            let mut s2 = 0.0;
            for &x in *chunk {
                let v = (-lambda * x).exp();
                s += v;
                s2 += v * v;
            }
            (s, s2)
        },
    );
    let (sum, sum2) = partials
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Empirical mean and standard error of `S^kappa` over a batch.
pub fn power_mean(batch: &StableSampleBatch, kappa: f64) -> (f64, f64) {
    let n = batch.draws.len() as f64;
    let (sum, sum2) = batch.draws.iter().fold((0.0, 0.0), |acc, &x| {
        let v = x.powf(kappa);
        (acc.0 + v, acc.1 + v * v)
    });
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Closed form `E[(S_t^{(alpha)})^kappa] = Gamma(1 - kappa/alpha) /
/// Gamma(1 - kappa) * t^{kappa/alpha}`, valid for `kappa < alpha`.
pub fn moment_closed_form(alpha: f64, kappa: f64, t: f64) -> Result<f64, SubordinatorError> {
    assert!(alpha > 0.0 && alpha < 1.0 && t > 0.0);
    if kappa >= alpha {
        return Err(SubordinatorError::MomentDomain { kappa, alpha });
    }
    Ok(gamma(1.0 - kappa / alpha) / gamma(1.0 - kappa) * t.powf(kappa / alpha))
}

/// Quadrature oracle `(1/Gamma(r)) int_0^inf e^{-t x^alpha} x^{r-1} dx`
/// for the negative moment `E[(S_t)^{-r}]`, `r > 0`.
///
/// The substitution `y = t x^alpha` turns the integral into
/// `(1/alpha) t^{-r/alpha} int_0^inf e^{-y} y^{r/alpha - 1} dy`, which is
/// evaluated numerically (never via the Gamma function).
pub fn moment_quadrature(alpha: f64, r: f64, t: f64) -> Result<f64, SubordinatorError> {
    assert!(alpha > 0.0 && alpha < 1.0 && r > 0.0 && t > 0.0);
    let g = quad::exp_power_integral(r / alpha, 1e-12)?;
    Ok(g.value / (alpha * gamma(r)) * t.powf(-r / alpha))
}

/// One row of the moment sandwich at a fixed time.
#[derive(Debug, Clone, Copy)]
pub struct SandwichRecord {
    pub t: f64,
    pub lower: f64,
    pub estimate: f64,
    pub upper: f64,
    /// Whether the estimate integral failed to converge (reported as
    /// `+inf`; the moment does not exist at this `t`).
    pub divergent: bool,
    pub holds: bool,
}

/// Brackets `E[(S_t^f)^{-r}]` for a general Bernstein `f`:
/// `[f^{-1}(1/t)]^r / (3 Gamma(1+r))` from below and
/// `C [f^{-1}(1/t)]^r / Gamma(1+r)` from above, with
/// `C = 1 + sum_n e^{-2^n} c^{(n+1) r}` built from the measured doubling
/// constant `c` of `f^{-1}` on `[1, 1/min(t)]`. The estimate itself is the
/// quadrature of `(1/Gamma(r)) int e^{-t f(x)} x^{r-1} dx`; a divergent
/// integral (the moment blowing up) is recorded as `+inf`, which is
/// consistent with the bounds in the extended reals.
pub fn moment_sandwich_check(
    f: &BernsteinFunction,
    r: f64,
    t_grid: &[f64],
) -> Result<Vec<SandwichRecord>, SubordinatorError> {
    assert!(r > 0.0);
    assert!(t_grid.iter().all(|&t| t > 0.0 && t <= 1.0));
    if !f.is_bernstein() {
        return Err(SubordinatorError::Unsupported(
            f.name().into(),
            "not a Bernstein function".into(),
        ));
    }
    let probe: Vec<f64> = (0..48).map(|i| 10f64.powf(-8.0 + i as f64 * 0.2)).collect();
    if !f.doubling_holds_at_zero(&probe, 0.01)? {
        return Err(SubordinatorError::Unsupported(
            f.name().into(),
            "doubling condition f(2l)/f(l) > 1 fails on the small-l probe grid".into(),
        ));
    }

    let t_min = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let c = f.inverse_doubling_constant((1.0 / t_min).max(2.0))?;
    let upper_const = sandwich_upper_constant(c, r);

    let gamma_1r = gamma(1.0 + r);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let inv = f.inverse(1.0 / t)?;
        let inv_r = inv.powf(r);
        let lower = inv_r / (3.0 * gamma_1r);
        let upper = upper_const * inv_r / gamma_1r;
        let (estimate, divergent) = match sandwich_estimate(f, r, t) {
            Ok(v) => (v, false),
            Err(SubordinatorError::Quadrature(QuadError::Divergent { .. })) => {
                (f64::INFINITY, true)
            }
            Err(e) => return Err(e),
        };
        let slop = 1.0 + 1e-9;
        let holds = lower <= estimate * slop && estimate <= upper * slop;
        out.push(SandwichRecord {
            t,
            lower,
            estimate,
            upper,
            divergent,
            holds,
        });
    }
    Ok(out)
}

/// `1 + sum_{n>=0} e^{-2^n} c^{(n+1) r}`, summed in log space.
fn sandwich_upper_constant(c: f64, r: f64) -> f64 {
    if !c.is_finite() {
        return f64::INFINITY;
    }
    let ln_c = c.ln();
    let mut total = 1.0f64;
    for n in 0..64 {
        let ln_term = -(2f64).powi(n) + (n as f64 + 1.0) * r * ln_c;
        let term = ln_term.exp();
        total += term;
        if !total.is_finite() {
            return f64::INFINITY;
        }
        if term < 1e-18 * total {
            break;
        }
    }
    total
}

/// `(1/Gamma(r)) int_0^inf e^{-t f(x)} x^{r-1} dx` by adaptive quadrature;
/// the head `(0,1]` is regularized by `x = u^m`.
fn sandwich_estimate(f: &BernsteinFunction, r: f64, t: f64) -> Result<f64, SubordinatorError> {
    let eval = |x: f64| f.closed_form(x).unwrap_or(f64::NAN);
    let m = (2.0 / r).ceil().max(2.0);
    let head = quad::adaptive(
        |u: f64| {
            if u == 0.0 {
                return 0.0;
            }
            let x = u.powf(m);
            m * u.powf(m * r - 1.0) * (-t * eval(x)).exp()
        },
        0.0,
        1.0,
        1e-11,
        1e-300,
    )?;
    let tail = quad::upper_improper(|x| (-t * eval(x)).exp() * x.powf(r - 1.0), 1.0, 1e-11)?;
    Ok((head.value + tail.value) / gamma(r))
}

/// Monte Carlo subordination output: the averaged field and the aggregated
/// `L^2` standard error of the mode-wise multiplier estimates.
#[derive(Debug)]
pub struct McSubordination {
    pub field: SpectralField,
    pub aggregated_stderr_l2: f64,
}

/// `W_t^f u` realized as the expected value `(1/N) sum_i W_{S_i} u` over
/// stable draws `S_i`; restricted to `f = l^alpha` where exact sampling is
/// available.
pub fn mc_subordinate(
    f: &BernsteinFunction,
    t: f64,
    u: &SpectralField,
    count: usize,
    seed: u64,
) -> Result<McSubordination, SubordinatorError> {
    let alpha = match f.family() {
        Family::Stable { alpha } | Family::StableFromLevy { alpha } => *alpha,
        _ => {
            return Err(SubordinatorError::Unsupported(
                f.name().into(),
                "Monte Carlo subordination needs exact stable sampling".into(),
            ))
        }
    };
    assert!(count >= 1);
    let batch = sample_stable(alpha, t, count, seed);
    subordinate_with_draws(&batch.draws, u)
}

/// Averages the Gauss-Weierstrass evolution over explicit subordinator
/// draws: mode `xi` receives `(1/N) sum_i e^{-S_i |xi|^2}`.
pub fn subordinate_with_draws(
    draws: &[f64],
    u: &SpectralField,
) -> Result<McSubordination, SubordinatorError> {
    let hat = u.forward()?;
    let grid = *hat.grid();
    let n = draws.len() as f64;

    // band-limited input: only modes carrying coefficients participate
    let support: Vec<(usize, f64)> = (0..grid.len())
        .filter(|&i| hat.values()[i].norm_sqr() > 0.0)
        .map(|i| (i, grid.xi_norm_sq(i)))
        .collect();

    let chunks: Vec<&[f64]> = draws.chunks(CHUNK).collect();
    let partials: Vec<Vec<(f64, f64)>> = par::map_slice(&chunks, |chunk| {
        let mut acc = vec![(0.0f64, 0.0f64); support.len()];
        for &s in *chunk {
            for (slot, &(_, lambda)) in acc.iter_mut().zip(&support) {
                let v = (-s * lambda).exp();
                slot.0 += v;
                slot.1 += v * v;
            }
        }
        acc
    });

    let mut hat_out = hat.clone();
    for v in hat_out.values_mut().iter_mut() {
        *v = Complex64::ZERO;
    }
    // L2 weight per mode: |u_hat|^2 dxi^n / (2 pi)^n  (lattice Parseval)
    let weight = (grid.dxi() / std::f64::consts::TAU).powi(grid.dim() as i32);
    let mut var_weighted = 0.0;
    for (slot, &(idx, _)) in support.iter().enumerate() {
        let (mut sum, mut sum2) = (0.0, 0.0);
        for part in &partials {
            sum += part[slot].0;
            sum2 += part[slot].1;
        }
        let mean = sum / n;
        let var = (sum2 / n - mean * mean).max(0.0);
        hat_out.values_mut()[idx] = hat.values()[idx] * mean;
        var_weighted += var / n * hat.values()[idx].norm_sqr() * weight;
    }
    Ok(McSubordination {
        field: hat_out.inverse()?,
        aggregated_stderr_l2: var_weighted.sqrt(),
    })
}

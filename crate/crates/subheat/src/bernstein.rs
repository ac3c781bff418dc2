//! Bernstein functions and their Levy-Khintchine machinery.
//!
//! A Bernstein function `f` is nonnegative on `(0, inf)` with derivatives of
//! alternating sign; equivalently `f(l) = b*l + int_0^inf (1 - e^{-l r}) nu(dr)`
//! with drift `b >= 0` and a Levy measure `nu`. The shipped family covers
//! `l^a` (0 < a < 1, with and without its explicit Levy density),
//! `(l+c)^a - c^a`, `log(1+l)`, pure drift `l`, and the generalized exponents
//! `l^b`, `b >= 1`, which are kept as descriptors but flagged non-Bernstein
//! (their multipliers are not positivity preserving).

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::quad::{self, QuadError};

#[derive(Debug, Error)]
pub enum BernsteinError {
    #[error("levy integral quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error("target {y:.6e} outside bracket range [{f_lo:.6e}, {f_hi:.6e}]")]
    Bracket { y: f64, f_lo: f64, f_hi: f64 },
    #[error("argument must be positive, got {0:.6e}")]
    NonPositive(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shipped function families plus a fully caller-supplied descriptor.
#[derive(Clone)]
pub enum Family {
    /// `f(l) = l^alpha`, `0 < alpha < 1`, via the closed form.
    Stable { alpha: f64 },
    /// `f(l) = l^alpha` evaluated through its Levy density
    /// `alpha / Gamma(1-alpha) * r^{-alpha-1}`; exercises the quadrature path.
    StableFromLevy { alpha: f64 },
    /// `f(l) = (l + c)^alpha - c^alpha`, `0 < alpha < 1`, `c > 0`.
    Relativistic { alpha: f64, c: f64 },
    /// `f(l) = log(1 + l)`.
    Log1p,
    /// `f(l) = l` (drift `b = 1`, no jumps).
    Drift,
    /// Generalized exponent `f(l) = l^beta`, `beta >= 1`; not a Bernstein
    /// function for `beta > 1`.
    Power { beta: f64 },
    /// Custom descriptor with optional closed forms and Levy data.
    Custom {
        drift_b: f64,
        closed_form: Option<ScalarFn>,
        closed_form_inverse: Option<ScalarFn>,
        levy_density: Option<ScalarFn>,
        levy_tail_mass: Option<ScalarFn>,
    },
}

/// A named Bernstein-function descriptor.
#[derive(Clone)]
pub struct BernsteinFunction {
    name: String,
    family: Family,
}

impl fmt::Debug for BernsteinFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BernsteinFunction({})", self.name)
    }
}

const LEVY_REL_TOL: f64 = 1e-11;
const BRACKET_LO: f64 = 1e-12;
const BRACKET_HI: f64 = 1e12;

impl BernsteinFunction {
    pub fn stable(alpha: f64) -> Self {
        assert!(
            alpha > 0.0 && alpha < 1.0,
            "stable exponent must be in (0,1), got {alpha}"
        );
        Self {
            name: format!("stable(alpha={alpha})"),
            family: Family::Stable { alpha },
        }
    }

    pub fn stable_from_levy(alpha: f64) -> Self {
        assert!(
            alpha > 0.0 && alpha < 1.0,
            "stable exponent must be in (0,1), got {alpha}"
        );
        Self {
            name: format!("stable-levy(alpha={alpha})"),
            family: Family::StableFromLevy { alpha },
        }
    }

    pub fn relativistic(alpha: f64, c: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0 && c > 0.0);
        Self {
            name: format!("relativistic(alpha={alpha},c={c})"),
            family: Family::Relativistic { alpha, c },
        }
    }

    pub fn log1p() -> Self {
        Self {
            name: "log1p".into(),
            family: Family::Log1p,
        }
    }

    pub fn drift() -> Self {
        Self {
            name: "drift".into(),
            family: Family::Drift,
        }
    }

    pub fn power(beta: f64) -> Self {
        assert!(beta >= 1.0, "generalized exponent needs beta >= 1, got {beta}");
        Self {
            name: format!("power(beta={beta})"),
            family: Family::Power { beta },
        }
    }

    pub fn custom(name: impl Into<String>, family: Family) -> Self {
        Self {
            name: name.into(),
            family,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Whether the descriptor is an actual Bernstein function (the
    /// generalized exponents `l^beta`, `beta > 1`, are not).
    pub fn is_bernstein(&self) -> bool {
        match &self.family {
            Family::Power { beta } => *beta <= 1.0,
            _ => true,
        }
    }

    pub fn drift_b(&self) -> f64 {
        match &self.family {
            Family::Drift => 1.0,
            Family::Custom { drift_b, .. } => *drift_b,
            _ => 0.0,
        }
    }

    pub fn closed_form(&self, lambda: f64) -> Option<f64> {
        match &self.family {
            Family::Stable { alpha } => Some(lambda.powf(*alpha)),
            Family::StableFromLevy { .. } => None,
            Family::Relativistic { alpha, c } => Some((lambda + c).powf(*alpha) - c.powf(*alpha)),
            Family::Log1p => Some(lambda.ln_1p()),
            Family::Drift => Some(lambda),
            Family::Power { beta } => Some(lambda.powf(*beta)),
            Family::Custom { closed_form, .. } => closed_form.as_ref().map(|f| f(lambda)),
        }
    }

    pub fn closed_form_inverse(&self, y: f64) -> Option<f64> {
        match &self.family {
            Family::Stable { alpha } => Some(y.powf(1.0 / alpha)),
            Family::StableFromLevy { .. } => None,
            Family::Relativistic { alpha, c } => {
                Some((y + c.powf(*alpha)).powf(1.0 / alpha) - c)
            }
            Family::Log1p => Some(y.exp_m1()),
            Family::Drift => Some(y),
            Family::Power { beta } => Some(y.powf(1.0 / beta)),
            Family::Custom {
                closed_form_inverse,
                ..
            } => closed_form_inverse.as_ref().map(|f| f(y)),
        }
    }

    pub fn levy_density(&self, r: f64) -> Option<f64> {
        match &self.family {
            Family::Stable { alpha } | Family::StableFromLevy { alpha } => {
                Some(alpha / gamma(1.0 - alpha) * r.powf(-alpha - 1.0))
            }
            Family::Custom { levy_density, .. } => levy_density.as_ref().map(|f| f(r)),
            _ => None,
        }
    }

    /// Mass of the Levy measure on `(r, inf)` when known in closed form.
    pub fn levy_tail_mass(&self, r: f64) -> Option<f64> {
        match &self.family {
            Family::Stable { alpha } | Family::StableFromLevy { alpha } => {
                Some(r.powf(-alpha) / gamma(1.0 - alpha))
            }
            Family::Custom { levy_tail_mass, .. } => levy_tail_mass.as_ref().map(|f| f(r)),
            _ => None,
        }
    }

    /// Evaluates `f(lambda)`, preferring the closed form and falling back on
    /// the Levy-Khintchine integral.
    pub fn eval(&self, lambda: f64) -> Result<f64, BernsteinError> {
        if lambda <= 0.0 {
            return Err(BernsteinError::NonPositive(lambda));
        }
        if let Some(v) = self.closed_form(lambda) {
            return Ok(v);
        }
        self.eval_levy(lambda)
    }

    /// `b*lambda + int_0^R (1 - e^{-lambda r}) nu(r) dr` with `R` grown until
    /// the remaining tail mass `nu((R, inf))` is negligible; since
    /// `1 - e^{-lambda r} <= 1` this bounds the truncation error directly.
    fn eval_levy(&self, lambda: f64) -> Result<f64, BernsteinError> {
        let density = |r: f64| self.levy_density(r).unwrap_or(0.0);

        let mut r_cut = 1.0f64;
        for _ in 0..80 {
            let tail = match self.levy_tail_mass(r_cut) {
                Some(m) => m,
                None => quad::upper_improper(density, r_cut, 1e-10)?.value,
            };
            if tail < 1e-12 {
                break;
            }
            r_cut *= 2.0;
        }

        // (0, 1]: substitute r = u^m so the r^{-alpha}-type singularity of
        // the integrand becomes O(u).
        let m = match &self.family {
            Family::Stable { alpha } | Family::StableFromLevy { alpha } => {
                (2.0 / (1.0 - alpha)).ceil().max(2.0)
            }
            _ => 4.0,
        };
        let head = quad::adaptive(
            |u: f64| {
                let r = u.powf(m);
                let kernel = if lambda * r < 1e-8 {
                    lambda * r
                } else {
                    -(-lambda * r).exp_m1()
                };
                m * u.powf(m - 1.0) * kernel * density(r)
            },
            0.0,
            1.0,
            LEVY_REL_TOL,
            1e-300,
        )?;
        let body = if r_cut > 1.0 {
            quad::adaptive(
                |r: f64| -(-lambda * r).exp_m1() * density(r),
                1.0,
                r_cut,
                LEVY_REL_TOL,
                1e-300,
            )?
            .value
        } else {
            0.0
        };
        Ok(self.drift_b() * lambda + head.value + body)
    }

    /// Solves `f(lambda) = y` on the default bracket, via the closed-form
    /// inverse when present and bisection on the strictly increasing `f`
    /// otherwise.
    pub fn inverse(&self, y: f64) -> Result<f64, BernsteinError> {
        if y <= 0.0 {
            return Err(BernsteinError::NonPositive(y));
        }
        if let Some(lambda) = self.closed_form_inverse(y) {
            return Ok(lambda);
        }
        let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
        let f_lo = self.eval(lo)?;
        let f_hi = self.eval(hi)?;
        if y < f_lo || y > f_hi {
            return Err(BernsteinError::Bracket { y, f_lo, f_hi });
        }
        // Levy-backed evaluations carry quadrature noise, so the residual
        // target cannot be tighter than their relative accuracy.
        let tol = (1e-12 * y.abs().max(1.0)).max(1e-9 * y.abs());
        let mut mid = lo;
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let fm = self.eval(mid)?;
            if (fm - y).abs() <= tol {
                return Ok(mid);
            }
            if fm < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= f64::EPSILON * mid.abs() {
                break;
            }
        }
        Ok(mid)
    }

    /// `f(2 lambda) / f(lambda)` along a grid of positive, sorted lambdas.
    pub fn doubling_ratio_profile(
        &self,
        lambda_grid: &[f64],
    ) -> Result<Vec<(f64, f64)>, BernsteinError> {
        lambda_grid
            .iter()
            .map(|&l| Ok((l, self.eval(2.0 * l)? / self.eval(l)?)))
            .collect()
    }

    /// Reports whether the minimum ratio over the small-lambda tail of the
    /// grid (its lowest quartile) exceeds `1 + margin`.
    pub fn doubling_holds_at_zero(
        &self,
        lambda_grid: &[f64],
        margin: f64,
    ) -> Result<bool, BernsteinError> {
        let profile = self.doubling_ratio_profile(lambda_grid)?;
        let tail_len = (profile.len() / 4).max(1);
        let min_tail = profile[..tail_len]
            .iter()
            .map(|&(_, r)| r)
            .fold(f64::INFINITY, f64::min);
        Ok(min_tail > 1.0 + margin)
    }

    /// Largest measured ratio `f^{-1}(2y) / f^{-1}(y)` over a log grid on
    /// `[1, y_hi]`. Finite for the power-type families (4 for `l^{1/2}`, 2
    /// for drift); overflows to `+inf` for `log(1+l)`, whose inverse grows
    /// exponentially (such functions fall outside the doubling-controlled
    /// moment and smoothing bounds).
    pub fn inverse_doubling_constant(&self, y_hi: f64) -> Result<f64, BernsteinError> {
        let points = 64;
        let mut c: f64 = 1.0;
        for i in 0..=points {
            let y = 10f64.powf(y_hi.log10() * i as f64 / points as f64);
            let ratio = self.inverse(2.0 * y)? / self.inverse(y)?;
            c = c.max(ratio);
        }
        Ok(c)
    }

    /// Worst violation of the Bernstein sign pattern over `n = 1..=4` raw
    /// central differences with step `h = 1e-3 * lambda`, probed on a
    /// log-spaced grid in `[1e-3, 1e3]`. Non-negative results up to roundoff
    /// mean the pattern `f' >= 0, f'' <= 0, f''' >= 0, ...` holds.
    pub fn monotonicity_violation(&self) -> Result<f64, BernsteinError> {
        let mut worst = f64::INFINITY;
        for i in 0..=60 {
            let lambda = 10f64.powf(-3.0 + 6.0 * i as f64 / 60.0);
            let h = 1e-3 * lambda;
            for n in 1..=4u32 {
                let mut diff = 0.0;
                for j in 0..=n {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let binom = binomial(n, j);
                    diff += sign * binom * self.eval(lambda + (n as f64 / 2.0 - j as f64) * h)?;
                }
                let signed = if n % 2 == 1 { diff } else { -diff };
                worst = worst.min(signed);
            }
        }
        Ok(worst)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stable_closed_form() {
        let f = BernsteinFunction::stable(0.5);
        assert_relative_eq!(f.eval(4.0).unwrap(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn stable_levy_route_matches_closed_form() {
        // Levy-Khintchine representation of l^alpha, evaluated by quadrature
        let f = BernsteinFunction::stable_from_levy(0.5);
        assert_relative_eq!(f.eval(4.0).unwrap(), 2.0, max_relative = 1e-6);
        for alpha in [0.3, 0.5, 0.7] {
            let levy = BernsteinFunction::stable_from_levy(alpha);
            for lambda in [0.1f64, 1.0, 4.0, 50.0] {
                let exact = lambda.powf(alpha);
                assert_relative_eq!(levy.eval(lambda).unwrap(), exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn drift_is_identity() {
        let f = BernsteinFunction::drift();
        assert_relative_eq!(f.eval(7.3).unwrap(), 7.3, max_relative = 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let stable = BernsteinFunction::stable(0.5);
        assert_relative_eq!(stable.inverse(3.0).unwrap(), 9.0, max_relative = 1e-12);

        let rel = BernsteinFunction::relativistic(0.5, 1.0);
        assert_relative_eq!(rel.inverse(1.0).unwrap(), 3.0, max_relative = 1e-12);

        let log = BernsteinFunction::log1p();
        assert_relative_eq!(
            log.inverse(1.0).unwrap(),
            std::f64::consts::E - 1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn inverse_of_eval_is_identity() {
        for f in [
            BernsteinFunction::stable(0.3),
            BernsteinFunction::stable(0.7),
            BernsteinFunction::relativistic(0.5, 1.0),
            BernsteinFunction::log1p(),
            BernsteinFunction::drift(),
        ] {
            for lambda in [1e-6, 1e-2, 1.0, 1e3, 1e9] {
                let y = f.eval(lambda).unwrap();
                let back = f.inverse(y).unwrap();
                assert_relative_eq!(back, lambda, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn bisection_inverse_on_levy_route() {
        let f = BernsteinFunction::stable_from_levy(0.5);
        let lambda = f.inverse(3.0).unwrap();
        assert_relative_eq!(lambda, 9.0, max_relative = 1e-6);
    }

    #[test]
    fn bracket_error_is_reported() {
        let f = BernsteinFunction::custom(
            "levy-only",
            Family::Custom {
                drift_b: 0.0,
                closed_form: Some(Arc::new(|l: f64| l.sqrt())),
                closed_form_inverse: None,
                levy_density: None,
                levy_tail_mass: None,
            },
        );
        assert!(matches!(
            f.inverse(1e12),
            Err(BernsteinError::Bracket { .. })
        ));
    }

    #[test]
    fn homogeneity_of_stable() {
        for alpha in [0.3, 0.5, 0.7] {
            let f = BernsteinFunction::stable(alpha);
            for c in [0.5, 2.0, 10.0] {
                for lambda in [0.2, 1.0, 30.0] {
                    let lhs = f.eval(c * lambda).unwrap();
                    let rhs = c.powf(alpha) * f.eval(lambda).unwrap();
                    assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn doubling_profiles() {
        let grid: Vec<f64> = (0..40).map(|i| 10f64.powf(-4.0 + i as f64 * 0.2)).collect();

        let stable = BernsteinFunction::stable(0.5);
        for (_, ratio) in stable.doubling_ratio_profile(&grid).unwrap() {
            assert_relative_eq!(ratio, 2f64.sqrt(), max_relative = 1e-12);
        }

        let drift = BernsteinFunction::drift();
        for (_, ratio) in drift.doubling_ratio_profile(&[0.01]).unwrap() {
            assert_relative_eq!(ratio, 2.0, max_relative = 1e-14);
        }

        // direct evaluation: log(1+2l)/log(1+l) = 2 - O(l) for small l
        let log = BernsteinFunction::log1p();
        let ratio = log.doubling_ratio_profile(&[1e-4]).unwrap()[0].1;
        assert!(ratio < 2.0 && (ratio - 2.0).abs() < 2e-4, "ratio = {ratio}");

        assert!(stable.doubling_holds_at_zero(&grid, 0.05).unwrap());
        assert!(log.doubling_holds_at_zero(&grid, 0.05).unwrap());
        assert!(drift.doubling_holds_at_zero(&grid, 0.05).unwrap());
    }

    #[test]
    fn f_vanishes_at_zero_and_increases() {
        for f in [
            BernsteinFunction::stable(0.5),
            BernsteinFunction::relativistic(0.5, 1.0),
            BernsteinFunction::log1p(),
            BernsteinFunction::drift(),
        ] {
            assert!(f.eval(1e-14).unwrap() < 1e-6);
            let mut prev = 0.0;
            for i in 0..30 {
                let v = f.eval(10f64.powf(-3.0 + 0.2 * i as f64)).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn alternating_sign_pattern() {
        for f in [
            BernsteinFunction::stable(0.3),
            BernsteinFunction::stable(0.5),
            BernsteinFunction::stable(0.7),
            BernsteinFunction::relativistic(0.5, 1.0),
            BernsteinFunction::log1p(),
            BernsteinFunction::drift(),
        ] {
            let worst = f.monotonicity_violation().unwrap();
            assert!(worst >= -1e-6, "{}: violation {worst}", f.name());
        }
    }

    #[test]
    fn generalized_exponents_are_flagged() {
        let f = BernsteinFunction::power(2.0);
        assert!(!f.is_bernstein());
        // the probe is meaningless for them; verify the flag is what callers
        // are expected to check before running it
        assert!(BernsteinFunction::stable(0.5).is_bernstein());
    }
}

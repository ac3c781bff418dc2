//! Heat-type semigroups as Fourier multipliers.
//!
//! Three kinds share the multiplier form `e^{-t g(|xi|^2)}`: the
//! Gauss-Weierstrass semigroup (`g(l) = l`), subordinated semigroups
//! (`g = f` for a Bernstein function), and generalized fractional powers
//! (`g(l) = l^beta`). On band-limited grid data the subordinated semigroup
//! and its lifting extension coincide, so the extension is checked through
//! the commutation `lift . apply = apply . lift` instead of being kept as a
//! second operator.

use num_complex::Complex64;
use thiserror::Error;

use crate::bernstein::{BernsteinError, BernsteinFunction};
use crate::grid::{GridError, Repr, SpectralField, TorusGrid};
use crate::par;

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
    #[error("kernel not resolved on this grid: multiplier at the Nyquist frequency is {nyquist:.3e} > 1e-8")]
    KernelUnresolved { nyquist: f64 },
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
}

/// Which symbol `g` drives the multiplier `e^{-t g(|xi|^2)}`.
#[derive(Debug, Clone)]
pub enum SemigroupKind {
    GaussWeierstrass,
    Subordinated(BernsteinFunction),
    GeneralizedPower { beta: f64 },
}

impl SemigroupKind {
    /// `g(l)` for `l = |xi|^2 > 0`; the origin is handled by the caller
    /// (`g(0) = 0` for every kind).
    fn symbol(&self, lambda: f64) -> Result<f64, SemigroupError> {
        match self {
            SemigroupKind::GaussWeierstrass => Ok(lambda),
            SemigroupKind::Subordinated(f) => Ok(f.eval(lambda)?),
            SemigroupKind::GeneralizedPower { beta } => Ok(lambda.powf(*beta)),
        }
    }

    /// Whether the kernel is a probability density (true for Bernstein
    /// symbols, false for generalized exponents `beta > 1`).
    pub fn is_markovian(&self) -> bool {
        match self {
            SemigroupKind::GaussWeierstrass => true,
            SemigroupKind::Subordinated(f) => f.is_bernstein(),
            SemigroupKind::GeneralizedPower { beta } => *beta <= 1.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SemigroupKind::GaussWeierstrass => "gauss_weierstrass".into(),
            SemigroupKind::Subordinated(f) => format!("subordinated[{}]", f.name()),
            SemigroupKind::GeneralizedPower { beta } => format!("power[beta={beta}]"),
        }
    }
}

/// A semigroup operator at a fixed time.
#[derive(Debug, Clone)]
pub struct SemigroupSpec {
    pub kind: SemigroupKind,
    pub time_t: f64,
}

impl SemigroupSpec {
    pub fn new(kind: SemigroupKind, time_t: f64) -> Result<Self, SemigroupError> {
        if time_t <= 0.0 {
            return Err(SemigroupError::NonPositiveTime(time_t));
        }
        Ok(Self { kind, time_t })
    }

    /// Multiplier value `e^{-t g(|xi|^2)}` at squared radius `lambda`;
    /// equals 1 at the origin.
    pub fn multiplier(&self, lambda: f64) -> Result<f64, SemigroupError> {
        if lambda == 0.0 {
            return Ok(1.0);
        }
        Ok((-self.time_t * self.kind.symbol(lambda)?).exp())
    }

    /// Multiplier sampled on the grid's frequency lattice.
    pub fn multiplier_values(&self, grid: &TorusGrid) -> Result<Vec<f64>, SemigroupError> {
        let vals: Vec<Result<f64, SemigroupError>> =
            par::map_indexed(grid.len(), |i| self.multiplier(grid.xi_norm_sq(i)));
        vals.into_iter().collect()
    }

    /// `W_t u = F^{-1}(e^{-t g(|xi|^2)} F u)` for a physical-space field.
    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField, SemigroupError> {
        let mut hat = u.forward()?;
        self.apply_frequency(&mut hat)?;
        Ok(hat.inverse()?)
    }

    /// Multiplies frequency coefficients in place.
    pub fn apply_frequency(&self, hat: &mut SpectralField) -> Result<(), SemigroupError> {
        let values = self.multiplier_values(hat.grid())?;
        if hat.repr() != Repr::Frequency {
            return Err(SemigroupError::Grid(GridError::ReprMismatch {
                expected: Repr::Frequency,
                found: hat.repr(),
            }));
        }
        for (v, m) in hat.values_mut().iter_mut().zip(&values) {
            *v *= m;
        }
        Ok(())
    }

    /// Physical-space kernel `g_t^f` sampled on the grid; its lattice
    /// quadrature equals the multiplier at the origin, i.e. 1.
    ///
    /// Rejects grids where the multiplier has not decayed below `1e-8`
    /// at the Nyquist frequency (the kernel would be unresolved).
    pub fn kernel_extract(&self, grid: &TorusGrid) -> Result<SpectralField, SemigroupError> {
        let nyquist = self.multiplier(grid.xi_max() * grid.xi_max())?;
        if nyquist.abs() > 1e-8 {
            return Err(SemigroupError::KernelUnresolved { nyquist });
        }
        let values = self.multiplier_values(grid)?;
        let hat = SpectralField::new(
            *grid,
            Repr::Frequency,
            values.iter().map(|&m| Complex64::new(m, 0.0)).collect(),
        );
        Ok(hat.inverse()?)
    }

    /// Minimum kernel value and the fraction of negative mass
    /// `int (K)_- / int |K|`.
    pub fn positivity_probe(&self, grid: &TorusGrid) -> Result<(f64, f64), SemigroupError> {
        let kernel = self.kernel_extract(grid)?;
        let mut min = f64::INFINITY;
        let mut neg = 0.0;
        let mut abs = 0.0;
        for v in kernel.values() {
            let k = v.re;
            min = min.min(k);
            if k < 0.0 {
                neg -= k;
            }
            abs += k.abs();
        }
        Ok((min, neg / abs))
    }
}

/// `max_x |W_t W_s u - W_{t+s} u|` on the grid.
pub fn semigroup_property_check(
    kind: &SemigroupKind,
    t: f64,
    s: f64,
    u: &SpectralField,
) -> Result<f64, SemigroupError> {
    let w_t = SemigroupSpec::new(kind.clone(), t)?;
    let w_s = SemigroupSpec::new(kind.clone(), s)?;
    let w_ts = SemigroupSpec::new(kind.clone(), t + s)?;
    let two_step = w_t.apply(&w_s.apply(u)?)?;
    let one_step = w_ts.apply(u)?;
    Ok(two_step.max_abs_diff(&one_step))
}

/// Lifting operator `(1 - Delta)^{r/2}`: the multiplier `(1 + |xi|^2)^{r/2}`,
/// a bijection shifting smoothness by `-r`.
pub fn lift(u: &SpectralField, r: f64) -> Result<SpectralField, SemigroupError> {
    Ok(u.apply_multiplier(|xi| {
        let l = xi[0] * xi[0] + xi[1] * xi[1];
        Complex64::new((1.0 + l).powf(r / 2.0), 0.0)
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields;
    use approx::assert_relative_eq;

    fn grid() -> TorusGrid {
        TorusGrid::default_for_dim(1).unwrap()
    }

    fn band_limited(seed: u64) -> SpectralField {
        fields::band_noise(grid(), 0.0, 8.0, 0.5, seed)
            .inverse()
            .unwrap()
    }

    fn lp(u: &SpectralField, p: f64) -> f64 {
        let dx = u.grid().dx();
        if p.is_infinite() {
            u.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
        } else {
            (u.values().iter().map(|v| v.norm().powf(p)).sum::<f64>() * dx).powf(1.0 / p)
        }
    }

    #[test]
    fn strong_continuity_at_zero() {
        let u = band_limited(1);
        let spec = SemigroupSpec::new(SemigroupKind::GaussWeierstrass, 1e-12).unwrap();
        let v = spec.apply(&u).unwrap();
        let scale = lp(&u, f64::INFINITY);
        assert!(v.max_abs_diff(&u) / scale < 1e-8);
    }

    #[test]
    fn gauss_eigenmode() {
        let g = grid();
        let u = fields::cosine_mode(g, [5, 0]);
        let xi0 = 5.0 * g.dxi();
        let spec = SemigroupSpec::new(SemigroupKind::GaussWeierstrass, 1.0).unwrap();
        let v = spec.apply(&u).unwrap();
        let factor = (-xi0 * xi0).exp();
        for (i, w) in v.values().iter().enumerate() {
            let expect = factor * (xi0 * g.x(i)[0]).cos();
            assert!((w.re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn subordinated_half_equals_power_half() {
        let u = band_limited(2);
        let a = SemigroupSpec::new(
            SemigroupKind::Subordinated(BernsteinFunction::stable(0.5)),
            0.8,
        )
        .unwrap()
        .apply(&u)
        .unwrap();
        let b = SemigroupSpec::new(SemigroupKind::GeneralizedPower { beta: 0.5 }, 0.8)
            .unwrap()
            .apply(&u)
            .unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn semigroup_property() {
        let u = fields::gaussian(grid(), 4.0);
        for (kind, t, s) in [
            (SemigroupKind::GaussWeierstrass, 0.5, 0.5),
            (
                SemigroupKind::Subordinated(BernsteinFunction::stable(0.5)),
                0.2,
                0.9,
            ),
            (SemigroupKind::GeneralizedPower { beta: 2.0 }, 0.3, 0.7),
        ] {
            let dev = semigroup_property_check(&kind, t, s, &u).unwrap();
            assert!(dev <= 1e-12, "{}: deviation {dev:.3e}", kind.label());
        }
    }

    #[test]
    fn gauss_kernel_peak_value() {
        let g = grid();
        let spec = SemigroupSpec::new(SemigroupKind::GaussWeierstrass, 1.0).unwrap();
        let kernel = spec.kernel_extract(&g).unwrap();
        let at_zero = kernel.values()[g.len() / 2].re;
        let expected = (4.0 * std::f64::consts::PI).powf(-0.5);
        assert_relative_eq!(at_zero, expected, max_relative = 1e-12);
    }

    #[test]
    fn cauchy_poisson_kernel_value() {
        let g = grid();
        let spec = SemigroupSpec::new(
            SemigroupKind::Subordinated(BernsteinFunction::stable(0.5)),
            1.0,
        )
        .unwrap();
        let kernel = spec.kernel_extract(&g).unwrap();
        let at_zero = kernel.values()[g.len() / 2].re;
        // 1/pi up to the box periodization of the heavy Cauchy tail, which
        // contributes ~2/(pi (2L)^2) * zeta(2) ~ 6.5e-6 on this grid
        assert_relative_eq!(at_zero, 1.0 / std::f64::consts::PI, max_relative = 3e-5);
    }

    #[test]
    fn kernels_have_unit_mass() {
        let g = grid();
        for kind in [
            SemigroupKind::GaussWeierstrass,
            SemigroupKind::Subordinated(BernsteinFunction::stable(0.5)),
            SemigroupKind::Subordinated(BernsteinFunction::relativistic(0.5, 1.0)),
        ] {
            let spec = SemigroupSpec::new(kind, 1.0).unwrap();
            let kernel = spec.kernel_extract(&g).unwrap();
            let mass: f64 = kernel.values().iter().map(|v| v.re).sum::<f64>() * g.dx();
            assert_relative_eq!(mass, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn unresolved_kernel_is_rejected() {
        let g = grid();
        let spec = SemigroupSpec::new(SemigroupKind::GaussWeierstrass, 1e-4).unwrap();
        assert!(matches!(
            spec.kernel_extract(&g),
            Err(SemigroupError::KernelUnresolved { .. })
        ));
    }

    #[test]
    fn positivity_dichotomy() {
        let g = grid();
        let (min_gauss, neg_gauss) =
            SemigroupSpec::new(SemigroupKind::GaussWeierstrass, 1.0)
                .unwrap()
                .positivity_probe(&g)
                .unwrap();
        assert!(min_gauss >= -1e-12 && neg_gauss < 1e-10);

        let (min_stable, _) = SemigroupSpec::new(
            SemigroupKind::Subordinated(BernsteinFunction::stable(0.5)),
            1.0,
        )
        .unwrap()
        .positivity_probe(&g)
        .unwrap();
        assert!(min_stable >= -1e-8);

        let (min_power, neg_power) =
            SemigroupSpec::new(SemigroupKind::GeneralizedPower { beta: 2.0 }, 1.0)
                .unwrap()
                .positivity_probe(&g)
                .unwrap();
        assert!(min_power < -1e-4, "biharmonic kernel min {min_power:.3e}");
        assert!(neg_power > 1e-4);
    }

    #[test]
    fn lp_contractivity_for_markovian_kinds() {
        let kinds = [
            SemigroupKind::GaussWeierstrass,
            SemigroupKind::Subordinated(BernsteinFunction::stable(0.5)),
            SemigroupKind::Subordinated(BernsteinFunction::relativistic(0.5, 1.0)),
        ];
        for seed in 0..20 {
            let u = band_limited(100 + seed);
            for kind in &kinds {
                let spec = SemigroupSpec::new(kind.clone(), 0.5).unwrap();
                let v = spec.apply(&u).unwrap();
                for p in [1.0, 2.0, f64::INFINITY] {
                    let ratio = lp(&v, p) / lp(&u, p);
                    assert!(
                        ratio <= 1.0 + 1e-8,
                        "{} p={p} seed={seed}: ratio {ratio}",
                        kind.label()
                    );
                }
            }
        }
    }

    #[test]
    fn multiplier_route_equals_convolution_route() {
        let g = TorusGrid::new(1, 256, 16.0 * std::f64::consts::PI).unwrap();
        let u = fields::band_noise(g, 0.0, 4.0, 0.5, 9).inverse().unwrap();
        let spec = SemigroupSpec::new(SemigroupKind::GaussWeierstrass, 0.5).unwrap();
        let via_multiplier = spec.apply(&u).unwrap();
        let kernel = spec.kernel_extract(&g).unwrap();

        // direct circular convolution sum_k K(x_j - x_k) u(x_k) dx
        let n = g.len();
        let dx = g.dx();
        let mut conv = vec![0.0f64; n];
        for (j, c) in conv.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..n {
                let idx = (j + n - k) % n;
                // kernel array is centered: index n/2 is x = 0
                let shifted = (idx + n / 2) % n;
                acc += kernel.values()[shifted].re * u.values()[k].re;
            }
            *c = acc * dx;
        }
        let worst = via_multiplier
            .values()
            .iter()
            .zip(&conv)
            .map(|(a, b)| (a.re - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "max deviation {worst:.3e}");
    }

    #[test]
    fn lift_identity_bijection_commutation() {
        let u = band_limited(3);

        let same = lift(&u, 0.0).unwrap();
        assert!(u.max_abs_diff(&same) < 1e-14);

        let round = lift(&lift(&u, 1.5).unwrap(), -1.5).unwrap();
        assert!(u.max_abs_diff(&round) < 1e-10);

        let spec = SemigroupSpec::new(
            SemigroupKind::Subordinated(BernsteinFunction::stable(0.5)),
            0.3,
        )
        .unwrap();
        let a = lift(&spec.apply(&u).unwrap(), 2.0).unwrap();
        let b = spec.apply(&lift(&u, 2.0).unwrap()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }
}

//! Test-field family: Gaussians, compact bumps, pure modes and seeded
//! band-limited noise.
//!
//! All constructors produce real physical fields (band noise through
//! Hermitian-symmetric coefficients). Widths default well inside the box so
//! wrap-around aliasing stays far below the tolerances used in tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{SpectralField, TorusGrid};

/// `exp(-|x|^2 / (2 sigma^2))`.
pub fn gaussian(grid: TorusGrid, sigma: f64) -> SpectralField {
    SpectralField::from_physical_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        (-r2 / (2.0 * sigma * sigma)).exp()
    })
}

/// Compactly supported bump `exp(-1 / (1 - (|x|/radius)^2))` on `|x| < radius`.
pub fn bump(grid: TorusGrid, radius: f64) -> SpectralField {
    SpectralField::from_physical_fn(grid, |x| {
        let s2 = (x[0] * x[0] + x[1] * x[1]) / (radius * radius);
        if s2 >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s2)).exp()
        }
    })
}

/// `cos(xi0 . x)` for the lattice frequency with the given integer modes.
pub fn cosine_mode(grid: TorusGrid, modes: [i64; 2]) -> SpectralField {
    let dxi = grid.dxi();
    let xi0 = [modes[0] as f64 * dxi, modes[1] as f64 * dxi];
    SpectralField::from_physical_fn(grid, |x| (xi0[0] * x[0] + xi0[1] * x[1]).cos())
}

/// `sin(xi0 . x)` for the lattice frequency with the given integer modes.
pub fn sine_mode(grid: TorusGrid, modes: [i64; 2]) -> SpectralField {
    let dxi = grid.dxi();
    let xi0 = [modes[0] as f64 * dxi, modes[1] as f64 * dxi];
    SpectralField::from_physical_fn(grid, |x| (xi0[0] * x[0] + xi0[1] * x[1]).sin())
}

/// Seeded real noise with coefficients supported on `xi_lo < |xi| <= xi_hi`
/// and amplitude `|xi|^{-decay}`.
///
/// With `decay = (dim - 1)/2 + s` the dyadic block norms `2^{ks} a_k` of the
/// field are flat in `k`, which is the rough-field profile that saturates
/// smoothing bounds.
pub fn band_noise(grid: TorusGrid, xi_lo: f64, xi_hi: f64, decay: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = SpectralField::zeros(grid, crate::grid::Repr::Frequency);
    let n = grid.points_per_axis() as i64;

    let conjugate_index = |i: usize| -> usize {
        let m = grid.modes(i);
        let neg = |v: i64| (((-v) % n + n) % n) as usize;
        match grid.dim() {
            1 => neg(m[0]),
            _ => neg(m[0]) * grid.points_per_axis() + neg(m[1]),
        }
    };
    let canonical = |i: usize| -> bool {
        let m = grid.modes(i);
        m[0] > 0 || (m[0] == 0 && m[1] >= 0)
    };

    // one phase draw per lattice index, consumed in order, so the field is a
    // pure function of (grid, band, seed)
    for i in 0..grid.len() {
        let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        if !canonical(i) {
            continue;
        }
        let r = grid.xi_norm_sq(i).sqrt();
        if r <= xi_lo || r > xi_hi {
            continue;
        }
        let amp = r.powf(-decay);
        let j = conjugate_index(i);
        if j == i {
            field.values_mut()[i] = Complex64::new(amp * phase.cos(), 0.0);
        } else {
            let v = Complex64::from_polar(amp, phase);
            field.values_mut()[i] = v;
            field.values_mut()[j] = v.conj();
        }
    }
    field
}

/// The standard mixed family used by the smoothing experiments.
pub fn standard_family(grid: TorusGrid, xi_hi: f64, seed: u64) -> Vec<(String, SpectralField)> {
    let l = grid.half_length();
    vec![
        ("gaussian-wide".into(), gaussian(grid, l / 16.0)),
        ("gaussian-narrow".into(), gaussian(grid, l / 64.0)),
        ("bump".into(), bump(grid, l / 8.0)),
        (
            "band-noise".into(),
            band_noise(grid, 0.0, xi_hi, 0.5, seed),
        ),
    ]
}

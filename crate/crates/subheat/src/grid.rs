//! Periodic torus grids and spectral fields.
//!
//! The physical box is `[-L, L)^n` sampled at `N` points per axis; the
//! frequency lattice is `xi = (pi/L) * m` for integer `m` in `[-N/2, N/2)`.
//! Frequency-side values are calibrated against the continuum Fourier
//! transform `int u(x) e^{-i xi x} dx`, so a multiplier sampled on the
//! lattice and sent through [`SpectralField::inverse`] yields the physical
//! convolution kernel with `sum_j K_j dx = multiplier(0)` exactly.

use std::cell::RefCell;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::par;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("field is in {found:?} representation, expected {expected:?}")]
    ReprMismatch { expected: Repr, found: Repr },
    #[error("multiplier evaluated to a non-finite value at lattice index {index}")]
    NonFiniteMultiplier { index: usize },
    #[error("grid too coarse for a dyadic partition: k_max = {k_max}, need >= 2")]
    TooCoarse { k_max: i32 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("points per axis must be a power of two, got {0}")]
    NotPowerOfTwo(usize),
    #[error("dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("csv parse error: {0}")]
    CsvParse(String),
}

/// Which representation the value buffer currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    Physical,
    Frequency,
}

/// Uniform periodic grid on `[-L, L)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    points_per_axis: usize,
    half_length: f64,
}

impl TorusGrid {
    pub fn new(dim: usize, points_per_axis: usize, half_length: f64) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::BadDimension(dim));
        }
        if !points_per_axis.is_power_of_two() || points_per_axis < 4 {
            return Err(GridError::NotPowerOfTwo(points_per_axis));
        }
        assert!(half_length > 0.0);
        Ok(Self {
            dim,
            points_per_axis,
            half_length,
        })
    }

    /// Default desk-scale grids: `N = 4096, L = 64 pi` in 1D and
    /// `N = 512, L = 16 pi` in 2D.
    pub fn default_for_dim(dim: usize) -> Result<Self, GridError> {
        match dim {
            1 => Self::new(1, 4096, 64.0 * std::f64::consts::PI),
            2 => Self::new(2, 512, 16.0 * std::f64::consts::PI),
            d => Err(GridError::BadDimension(d)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    /// Nyquist frequency `(pi/L) * N/2` per axis.
    pub fn xi_max(&self) -> f64 {
        self.dxi() * (self.points_per_axis / 2) as f64
    }

    /// Cell volume `dx^n`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    fn signed_mode(&self, m: usize) -> i64 {
        let n = self.points_per_axis;
        if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    /// Per-axis integer modes of a flat index.
    pub fn modes(&self, index: usize) -> [i64; 2] {
        match self.dim {
            1 => [self.signed_mode(index), 0],
            _ => {
                let n = self.points_per_axis;
                [self.signed_mode(index / n), self.signed_mode(index % n)]
            }
        }
    }

    /// Frequency vector at a flat index.
    pub fn xi(&self, index: usize) -> [f64; 2] {
        let m = self.modes(index);
        [m[0] as f64 * self.dxi(), m[1] as f64 * self.dxi()]
    }

    pub fn xi_norm_sq(&self, index: usize) -> f64 {
        let xi = self.xi(index);
        xi[0] * xi[0] + xi[1] * xi[1]
    }

    /// Physical coordinates at a flat index, spanning `[-L, L)`.
    pub fn x(&self, index: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        let coord = |j: usize| -self.half_length + j as f64 * self.dx();
        match self.dim {
            1 => [coord(index), 0.0],
            _ => [coord(index / n), coord(index % n)],
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// A complex field on a [`TorusGrid`], tagged with its representation.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: TorusGrid,
    repr: Repr,
    values: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: TorusGrid, repr: Repr, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value buffer does not match grid");
        Self { grid, repr, values }
    }

    pub fn zeros(grid: TorusGrid, repr: Repr) -> Self {
        Self::new(grid, repr, vec![Complex64::ZERO; grid.len()])
    }

    /// Samples a physical-space function on the lattice.
    pub fn from_physical_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| Complex64::new(f(grid.x(i)), 0.0))
            .collect();
        Self::new(grid, Repr::Physical, values)
    }

    /// Fills frequency-side coefficients directly.
    pub fn from_frequency_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.xi(i))).collect();
        Self::new(grid, Repr::Frequency, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    fn expect_repr(&self, expected: Repr) -> Result<(), GridError> {
        if self.repr != expected {
            return Err(GridError::ReprMismatch {
                expected,
                found: self.repr,
            });
        }
        Ok(())
    }

    fn fft_all_axes(&self, forward: bool) -> Vec<Complex64> {
        let n = self.grid.points_per_axis;
        let fft = plan(n, forward);
        let mut buf = self.values.clone();
        match self.grid.dim {
            1 => fft.process(&mut buf),
            _ => {
                // rows, then columns via transpose
                for row in buf.chunks_exact_mut(n) {
                    fft.process(row);
                }
                let mut t = transpose(&buf, n);
                for row in t.chunks_exact_mut(n) {
                    fft.process(row);
                }
                buf = transpose(&t, n);
            }
        }
        buf
    }

    /// Forward transform: physical samples to continuum-calibrated
    /// frequency coefficients `u_hat(xi) ~ int u e^{-i xi x} dx`.
    pub fn forward(&self) -> Result<SpectralField, GridError> {
        self.expect_repr(Repr::Physical)?;
        let mut buf = self.fft_all_axes(true);
        let scale = self.grid.cell_volume();
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= scale * parity(&self.grid, i);
        }
        Ok(SpectralField::new(self.grid, Repr::Frequency, buf))
    }

    /// Inverse transform: frequency coefficients back to physical samples.
    pub fn inverse(&self) -> Result<SpectralField, GridError> {
        self.expect_repr(Repr::Frequency)?;
        let mut phased = self.clone();
        for (i, v) in phased.values.iter_mut().enumerate() {
            *v *= parity(&self.grid, i);
        }
        let mut buf = phased.fft_all_axes(false);
        let n = self.grid.points_per_axis as f64;
        let scale = (n * self.grid.dx()).powi(self.grid.dim as i32).recip();
        for v in buf.iter_mut() {
            *v *= scale;
        }
        Ok(SpectralField::new(self.grid, Repr::Physical, buf))
    }

    /// The field in physical representation (identity if already there).
    pub fn to_physical(&self) -> Result<SpectralField, GridError> {
        match self.repr {
            Repr::Physical => Ok(self.clone()),
            Repr::Frequency => self.inverse(),
        }
    }

    /// The field in frequency representation (identity if already there).
    pub fn to_frequency(&self) -> Result<SpectralField, GridError> {
        match self.repr {
            Repr::Frequency => Ok(self.clone()),
            Repr::Physical => self.forward(),
        }
    }

    /// Applies a Fourier multiplier `m(xi)` to a physical-space field:
    /// `F^{-1}(m * F u)`.
    pub fn apply_multiplier(
        &self,
        m: impl Fn([f64; 2]) -> Complex64 + Sync,
    ) -> Result<SpectralField, GridError> {
        self.expect_repr(Repr::Physical)?;
        let mut hat = self.forward()?;
        hat.multiply_frequency(&m)?;
        hat.inverse()
    }

    /// Pointwise multiplication of frequency coefficients by `m(xi)`.
    pub fn multiply_frequency(
        &mut self,
        m: impl Fn([f64; 2]) -> Complex64 + Sync,
    ) -> Result<(), GridError> {
        self.expect_repr(Repr::Frequency)?;
        let grid = self.grid;
        let factors = par::map_indexed(grid.len(), |i| m(grid.xi(i)));
        for (i, f) in factors.iter().enumerate() {
            if !f.re.is_finite() || !f.im.is_finite() {
                return Err(GridError::NonFiniteMultiplier { index: i });
            }
        }
        for (v, f) in self.values.iter_mut().zip(&factors) {
            *v *= f;
        }
        Ok(())
    }

    /// `self + scale * other`, elementwise on matching grids and
    /// representations.
    pub fn add_scaled(&mut self, other: &SpectralField, scale: Complex64) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        self.expect_repr(other.repr)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
        Ok(())
    }

    /// Maximum pointwise modulus difference against another field.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Writes `index,real,imag` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,real,imag")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:.16e},{:.16e}", i, v.re, v.im)?;
        }
        Ok(())
    }

    /// Reads a field previously written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(grid: TorusGrid, repr: Repr, r: R) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| GridError::CsvParse(e.to_string()))?;
            if lineno == 0 {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64, GridError> {
                s.ok_or_else(|| GridError::CsvParse(format!("short row at line {lineno}")))?
                    .trim()
                    .parse()
                    .map_err(|e| GridError::CsvParse(format!("line {lineno}: {e}")))
            };
            let _index = parse(parts.next())?;
            let re = parse(parts.next())?;
            let im = parse(parts.next())?;
            values.push(Complex64::new(re, im));
        }
        if values.len() != grid.len() {
            return Err(GridError::CsvParse(format!(
                "expected {} rows, found {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(SpectralField::new(grid, repr, values))
    }
}

/// `(-1)^{m_x + m_y}` phase relating the FFT origin to the box corner `-L`.
fn parity(grid: &TorusGrid, index: usize) -> f64 {
    let m = grid.modes(index);
    if (m[0] + m[1]) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn transpose(buf: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; buf.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = buf[i * n + j];
        }
    }
    out
}

/// Smooth radial bump: `1` on `r <= 1`, supported in `r < 3/2`.
///
/// The transition `exp(1 - 1/(1 - ((r-1)/0.5)^2))` decays smoothly from `1`
/// to `0` on `1 < r < 3/2`, so `1_{B(0,1)} <= phi_0 <= 1_{B(0,3/2)}` holds
/// pointwise and exactly.
pub fn phi0_profile(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 1.5 {
        0.0
    } else {
        let s = (r - 1.0) / 0.5;
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Dyadic resolution of unity `phi_k` on the frequency lattice.
///
/// `phi_k(xi) = phi_0(2^{-k} xi) - phi_0(2^{-k+1} xi)` for `k >= 1`, which
/// telescopes to `sum_{k <= K} phi_k(xi) = phi_0(2^{-K} xi)`, equal to one on
/// `|xi| <= 2^K`.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: TorusGrid,
    k_max: usize,
}

impl DyadicPartition {
    pub fn build(grid: TorusGrid) -> Result<Self, GridError> {
        let k_max = grid.xi_max().log2().floor() as i32;
        if k_max < 2 {
            return Err(GridError::TooCoarse { k_max });
        }
        Ok(Self {
            grid,
            k_max: k_max as usize,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Largest dyadic block index resolved by the grid,
    /// `floor(log2(xi_max))`.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `phi_k` evaluated at radius `|xi|`.
    pub fn phi(&self, k: usize, xi_norm: f64) -> f64 {
        if k == 0 {
            phi0_profile(xi_norm)
        } else {
            let s = (2f64).powi(-(k as i32));
            phi0_profile(s * xi_norm) - phi0_profile(2.0 * s * xi_norm)
        }
    }

    /// Tabulates `phi_k` on the full frequency lattice.
    pub fn tabulate(&self, k: usize) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.phi(k, self.grid.xi_norm_sq(i).sqrt()))
            .collect()
    }

    /// The Littlewood-Paley block `phi_k(D) u` of a physical-space field.
    pub fn apply_block(&self, field: &SpectralField, k: usize) -> Result<SpectralField, GridError> {
        field.apply_multiplier(|xi| {
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            Complex64::new(self.phi(k, r), 0.0)
        })
    }

    /// Blocks of the frequency representation, without leaving frequency
    /// space (used by evaluators that never need physical samples).
    pub fn block_frequency(&self, hat: &SpectralField, k: usize) -> Result<SpectralField, GridError> {
        let mut out = hat.clone();
        out.multiply_frequency(|xi| {
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            Complex64::new(self.phi(k, r), 0.0)
        })?;
        Ok(out)
    }
}

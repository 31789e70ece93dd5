//! Lattice Fourier representation of functions on `T^d`, `d ∈ {1, 2}`.
//!
//! A [`SpectralField`] stores the coefficients `f̂(n)` of
//! `f(x) = Σ_n f̂(n) e^{i (2π/L) n·x}` for every lattice point `n` of a
//! [`FrequencyBox`] (all `|n_j| ≤ K`). Physical integrals use the normalized
//! average over the torus, so Parseval reads `Σ |f̂(n)|² = ⨍ |f|²`.

mod io;
mod norms;
mod spacetime;
mod transform;

pub use io::{read_binary, write_binary, SpectralFieldJson, BINARY_MAGIC, BINARY_VERSION};
pub use norms::{bracket, lebesgue_norm, ShellEnergy};
pub use spacetime::{smoothstep_window, SpaceTimeSpectrum, WindowKind};
pub use transform::{fft_len, forward_transform, inverse_transform, SpectralGrid};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Lattice vector. In one dimension the second component is always zero.
pub type Mode = [i64; 2];

#[inline]
pub fn mode_norm_sq(n: Mode) -> i64 {
    n[0] * n[0] + n[1] * n[1]
}

/// The symmetric box `{n ∈ Z^d : |n_j| ≤ K}` on a torus of circumference `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBox {
    dim: usize,
    half_width: usize,
    domain_scale: f64,
}

impl FrequencyBox {
    /// Box on the standard torus `L = 2π`.
    pub fn new(dim: usize, half_width: usize) -> Result<Self> {
        Self::with_scale(dim, half_width, 2.0 * PI)
    }

    pub fn with_scale(dim: usize, half_width: usize, domain_scale: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::precondition(format!("dimension must be 1 or 2, got {dim}")));
        }
        if half_width < 1 {
            return Err(Error::precondition("box half width K must be at least 1"));
        }
        if !(domain_scale.is_finite() && domain_scale > 0.0) {
            return Err(Error::precondition(format!(
                "domain scale must be positive, got {domain_scale}"
            )));
        }
        Ok(Self { dim, half_width, domain_scale })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn domain_scale(&self) -> f64 {
        self.domain_scale
    }

    /// Points per axis, `2K + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn mode_count(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    /// Minimum collocation grid size per axis for alias-free cubic products.
    pub fn min_grid_points(&self) -> usize {
        2 * self.side()
    }

    /// Factor converting lattice indices to wave numbers, `2π / L`.
    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * PI / self.domain_scale
    }

    /// `|ξ|²` for the physical wave vector `ξ = (2π/L) n`.
    pub fn wavenumber_sq(&self, n: Mode) -> f64 {
        let u = self.wavenumber_unit();
        u * u * mode_norm_sq(n) as f64
    }

    /// Largest lattice radius `K √d` reached inside the box.
    pub fn max_radius(&self) -> f64 {
        self.half_width as f64 * (self.dim as f64).sqrt()
    }

    pub fn contains(&self, n: Mode) -> bool {
        let k = self.half_width as i64;
        n[0].abs() <= k && n[1].abs() <= k && (self.dim == 2 || n[1] == 0)
    }

    /// Row-major position of `n`, or `None` outside the box.
    pub fn index_of(&self, n: Mode) -> Option<usize> {
        if !self.contains(n) {
            return None;
        }
        let k = self.half_width as i64;
        let i0 = (n[0] + k) as usize;
        Some(match self.dim {
            1 => i0,
            _ => i0 * self.side() + (n[1] + k) as usize,
        })
    }

    pub fn mode_at(&self, index: usize) -> Mode {
        let k = self.half_width as i64;
        match self.dim {
            1 => [index as i64 - k, 0],
            _ => {
                let side = self.side();
                [(index / side) as i64 - k, (index % side) as i64 - k]
            }
        }
    }

    /// All lattice points in storage order.
    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.mode_count()).map(move |i| self.mode_at(i))
    }

    fn check_same(&self, other: &FrequencyBox) -> Result<()> {
        if self != other {
            return Err(Error::structure(format!("box mismatch: {self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Fourier coefficients over a [`FrequencyBox`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    freq_box: FrequencyBox,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(freq_box: FrequencyBox) -> Self {
        Self { freq_box, coeffs: vec![Complex64::new(0.0, 0.0); freq_box.mode_count()] }
    }

    pub fn from_coeffs(freq_box: FrequencyBox, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != freq_box.mode_count() {
            return Err(Error::structure(format!(
                "expected {} coefficients, got {}",
                freq_box.mode_count(),
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::precondition(format!(
                "non-finite coefficient at mode {:?}",
                freq_box.mode_at(i)
            )));
        }
        Ok(Self { freq_box, coeffs })
    }

    /// Field with coefficient `value(n)` at every lattice point.
    pub fn from_fn(freq_box: FrequencyBox, mut value: impl FnMut(Mode) -> Complex64) -> Self {
        let coeffs = freq_box.modes().map(&mut value).collect();
        Self { freq_box, coeffs }
    }

    /// `value · e^{i n·x}`.
    pub fn single_mode(freq_box: FrequencyBox, n: Mode, value: Complex64) -> Result<Self> {
        let mut f = Self::zeros(freq_box);
        let idx = freq_box
            .index_of(n)
            .ok_or_else(|| Error::precondition(format!("mode {n:?} outside the box")))?;
        f.coeffs[idx] = value;
        Ok(f)
    }

    pub(crate) fn from_raw(freq_box: FrequencyBox, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), freq_box.mode_count());
        Self { freq_box, coeffs }
    }

    pub fn freq_box(&self) -> &FrequencyBox {
        &self.freq_box
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at `n`; zero outside the box.
    pub fn coeff(&self, n: Mode) -> Complex64 {
        self.freq_box.index_of(n).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.freq_box.mode_at(i), c))
    }

    /// `Σ |f̂(n)|²`, the normalized squared L² norm.
    #[inline]
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_raw(self.freq_box, self.coeffs.iter().map(|&c| c * factor).collect())
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.freq_box.check_same(&other.freq_box)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self::from_raw(self.freq_box, coeffs))
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.freq_box.check_same(&other.freq_box)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self::from_raw(self.freq_box, coeffs))
    }

    /// Largest coefficientwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &SpectralField) -> Result<f64> {
        self.freq_box.check_same(&other.freq_box)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Copy of the field inside a box with the same dimension and scale, dropping modes
    /// that no longer fit.
    pub fn resized(&self, target: FrequencyBox) -> Result<Self> {
        if target.dim() != self.freq_box.dim() || target.domain_scale() != self.freq_box.domain_scale()
        {
            return Err(Error::structure("resize requires equal dimension and domain scale"));
        }
        Ok(Self::from_fn(target, |n| self.coeff(n)))
    }

    /// `P_{≤N}`: keep modes with `|n| ≤ N` (lattice units).
    pub fn project_ball(&self, radius: u64) -> Self {
        let r2 = (radius as i64).saturating_mul(radius as i64);
        self.masked(|n| mode_norm_sq(n) <= r2)
    }

    /// `P_N = P_{≤N} − P_{≤N/2}` for a dyadic `N ≥ 1`: keeps `N/2 < |n| ≤ N`.
    pub fn project_annulus(&self, radius: u64) -> Result<Self> {
        if radius == 0 || !radius.is_power_of_two() {
            return Err(Error::precondition(format!("annulus radius {radius} is not dyadic")));
        }
        Ok(self.masked(|n| in_dyadic_shell(mode_norm_sq(n), radius)))
    }

    fn masked(&self, keep: impl Fn(Mode) -> bool) -> Self {
        let fb = self.freq_box;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if keep(fb.mode_at(i)) { c } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self::from_raw(fb, coeffs)
    }
}

/// `N/2 < |n| ≤ N` evaluated exactly on `|n|²`.
#[inline]
pub fn in_dyadic_shell(norm_sq: i64, shell: u64) -> bool {
    let n = shell as i64;
    4 * norm_sq > n * n && norm_sq <= n * n
}

/// Samples of a function on the tensor grid `x_j = L j / M`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    freq_box: FrequencyBox,
    points_per_axis: usize,
    samples: Vec<Complex64>,
}

impl GridField {
    pub fn new(freq_box: FrequencyBox, points_per_axis: usize, samples: Vec<Complex64>) -> Result<Self> {
        let expected = points_per_axis.pow(freq_box.dim() as u32);
        if samples.len() != expected {
            return Err(Error::structure(format!(
                "expected {expected} samples for M = {points_per_axis}, got {}",
                samples.len()
            )));
        }
        if points_per_axis < freq_box.side() {
            return Err(Error::structure(format!(
                "grid with M = {points_per_axis} cannot represent a box of side {}",
                freq_box.side()
            )));
        }
        Ok(Self { freq_box, points_per_axis, samples })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(
        freq_box: FrequencyBox,
        points_per_axis: usize,
        f: impl Fn([f64; 2]) -> Complex64,
    ) -> Result<Self> {
        let m = points_per_axis;
        let h = freq_box.domain_scale() / m as f64;
        let samples = match freq_box.dim() {
            1 => (0..m).map(|j| f([j as f64 * h, 0.0])).collect(),
            _ => (0..m * m).map(|j| f([(j / m) as f64 * h, (j % m) as f64 * h])).collect(),
        };
        Self::new(freq_box, m, samples)
    }

    pub fn freq_box(&self) -> &FrequencyBox {
        &self.freq_box
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Physical coordinates of sample `index`.
    pub fn point(&self, index: usize) -> [f64; 2] {
        let m = self.points_per_axis;
        let h = self.freq_box.domain_scale() / m as f64;
        match self.freq_box.dim() {
            1 => [index as f64 * h, 0.0],
            _ => [(index / m) as f64 * h, (index % m) as f64 * h],
        }
    }

    pub fn same_grid(&self, other: &GridField) -> bool {
        self.freq_box == other.freq_box && self.points_per_axis == other.points_per_axis
    }

    pub fn max_abs_diff(&self, other: &GridField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::structure("grid mismatch"));
        }
        Ok(self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

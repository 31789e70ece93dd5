//! Seeded Gaussian random Fourier series and unit-scale randomization of a
//! fixed profile on a periodized line or plane.
//!
//! Every Gaussian is a pure function of `(master_seed, trial, index)`: the seed
//! keys a ChaCha8 stream, the trial selects the stream and the index selects the
//! word position. Samples can be regenerated coefficient by coefficient in any
//! order.

mod tail;

pub use tail::{tail_estimate, NormDescriptor, TailReport};

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{bracket, mode_norm_sq, FrequencyBox, Mode, SpectralField};

/// Identifier of the bump `η` recorded in manifests.
pub const BUMP_NAME: &str = "radial C1 smoothstep: 1 on r<=1, 1-(3t^2-2t^3) with t=r-1 on 1<r<2, 0 on r>=2";

/// Smallest accepted periodization factor `P` (`L = 2πP`).
pub const MIN_PERIODIZATION: usize = 8;

const WORDS_PER_DRAW: u128 = 4;

/// Counter-based source of complex Gaussians with `E g = 0`, `E|g|² = 1`.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(trial);
        Self { rng }
    }

    /// Positions the stream so that the next draw is the one for `index`.
    pub fn seek(&mut self, index: u64) {
        self.rng.set_word_pos(WORDS_PER_DRAW * index as u128);
    }

    /// Draws the Gaussian at the current index and advances by one.
    pub fn next_gaussian(&mut self) -> Complex64 {
        // u1 ∈ (0, 1], u2 ∈ [0, 1)
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        // |g|² = −ln u1 is Exp(1); real and imaginary parts are N(0, 1/2)
        Complex64::from_polar((-u1.ln()).sqrt(), 2.0 * std::f64::consts::PI * u2)
    }

    pub fn gaussian_at(&mut self, index: u64) -> Complex64 {
        self.seek(index);
        self.next_gaussian()
    }
}

/// `g(master_seed, trial, index)`.
pub fn gaussian(master_seed: u64, trial: u64, index: u64) -> Complex64 {
    GaussianStream::new(master_seed, trial).gaussian_at(index)
}

/// Gaussian series `f̂(n) = g_n / ⟨n⟩^{d/2 + α}` on `|n_j| ≤ K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusEnsembleSpec {
    pub dim: usize,
    pub alpha: f64,
    pub cutoff_k: usize,
    pub master_seed: u64,
}

impl TorusEnsembleSpec {
    pub fn new(dim: usize, alpha: f64, cutoff_k: usize, master_seed: u64) -> Result<Self> {
        let spec = Self { dim, alpha, cutoff_k, master_seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::precondition(format!("alpha must be positive, got {}", self.alpha)));
        }
        FrequencyBox::new(self.dim, self.cutoff_k)?;
        Ok(())
    }

    pub fn freq_box(&self) -> FrequencyBox {
        FrequencyBox::new(self.dim, self.cutoff_k).expect("validated spec")
    }

    /// Deterministic amplitude `⟨n⟩^{−(d/2 + α)}`.
    pub fn amplitude(&self, n: Mode) -> f64 {
        bracket((mode_norm_sq(n) as f64).sqrt()).powf(-(self.dim as f64 / 2.0 + self.alpha))
    }

    /// `E‖f^ω‖²_{L²} = Σ_n ⟨n⟩^{−(d + 2α)}`.
    pub fn expected_mass(&self) -> f64 {
        self.freq_box().modes().map(|n| self.amplitude(n).powi(2)).sum()
    }
}

pub fn sample_torus_data(spec: &TorusEnsembleSpec, trial: u64) -> Result<SpectralField> {
    spec.validate()?;
    let fb = spec.freq_box();
    let mut stream = GaussianStream::new(spec.master_seed, trial);
    stream.seek(0);
    // lattice index order coincides with draw order
    Ok(SpectralField::from_fn(fb, |n| stream.next_gaussian() * spec.amplitude(n)))
}

/// The bump `η(r)` of [`BUMP_NAME`], as a function of the radius.
pub fn eta(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let t = r - 1.0;
        1.0 - t * t * (3.0 - 2.0 * t)
    }
}

fn distance(xi: [f64; 2], cell: Mode, dim: usize) -> f64 {
    let d0 = xi[0] - cell[0] as f64;
    let d1 = if dim == 2 { xi[1] - cell[1] as f64 } else { 0.0 };
    d0.hypot(d1)
}

/// Unit cells `ℓ` with `|ξ − ℓ| < 2`, i.e. those whose bump can be nonzero at `ξ`.
fn cells_near(xi: [f64; 2], dim: usize) -> Vec<Mode> {
    let range = |x: f64| (x.floor() as i64 - 2)..=(x.ceil() as i64 + 2);
    let mut out = Vec::new();
    for a in range(xi[0]) {
        if dim == 1 {
            out.push([a, 0]);
            continue;
        }
        for b in range(xi[1]) {
            out.push([a, b]);
        }
    }
    out.retain(|&c| distance(xi, c, dim) < 2.0);
    out
}

fn bump_sum(xi: [f64; 2], dim: usize) -> f64 {
    cells_near(xi, dim).into_iter().map(|c| eta(distance(xi, c, dim))).sum()
}

/// `ψ_n(ξ) = η(ξ − n) / Σ_ℓ η(ξ − ℓ)`.
pub fn psi_weight(n: Mode, xi: [f64; 2], dim: usize) -> f64 {
    let own = eta(distance(xi, n, dim));
    if own == 0.0 {
        return 0.0;
    }
    own / bump_sum(xi, dim)
}

/// `(ℓ, ψ_ℓ(ξ))` for every cell with nonzero weight at `ξ`.
pub fn psi_weights(xi: [f64; 2], dim: usize) -> Vec<(Mode, f64)> {
    let cells = cells_near(xi, dim);
    let bumps: Vec<f64> = cells.iter().map(|&c| eta(distance(xi, c, dim))).collect();
    let total: f64 = bumps.iter().sum();
    cells.into_iter().zip(bumps).filter(|(_, b)| *b > 0.0).map(|(c, b)| (c, b / total)).collect()
}

/// Randomization `f̂^ω(ξ) = Σ_n g_n ψ_n(ξ) f̂(ξ)` of a profile sampled on a
/// periodization box with `L = 2πP`, so that lattice mode `m` sits at `ξ = m/P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRandomizationSpec {
    pub base_coeffs: SpectralField,
    pub master_seed: u64,
}

impl LineRandomizationSpec {
    pub fn new(base_coeffs: SpectralField, master_seed: u64) -> Result<Self> {
        let spec = Self { base_coeffs, master_seed };
        spec.periodization()?;
        Ok(spec)
    }

    /// Integer factor `P = L/(2π)`, required to be at least [`MIN_PERIODIZATION`].
    pub fn periodization(&self) -> Result<usize> {
        let ratio = self.base_coeffs.freq_box().domain_scale() / (2.0 * std::f64::consts::PI);
        let p = ratio.round();
        if (ratio - p).abs() > 1e-9 * ratio || p < MIN_PERIODIZATION as f64 {
            return Err(Error::precondition(format!(
                "periodization L/2π = {ratio} must be an integer ≥ {MIN_PERIODIZATION}"
            )));
        }
        Ok(p as usize)
    }

    pub fn frequency_of(&self, m: Mode) -> [f64; 2] {
        let unit = self.base_coeffs.freq_box().wavenumber_unit();
        [unit * m[0] as f64, unit * m[1] as f64]
    }

    /// `E‖f^ω‖²_{L²} = Σ_ξ (Σ_n ψ_n(ξ)²) |f̂(ξ)|²`.
    pub fn expected_mass(&self) -> f64 {
        let dim = self.base_coeffs.freq_box().dim();
        self.base_coeffs
            .iter()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(m, c)| {
                let q: f64 = psi_weights(self.frequency_of(m), dim).iter().map(|(_, w)| w * w).sum();
                q * c.norm_sqr()
            })
            .sum()
    }
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

/// Counter index of the Gaussian attached to unit cell `ℓ`.
pub fn cell_index(cell: Mode) -> u64 {
    (zigzag(cell[0]) << 32) | zigzag(cell[1])
}

pub fn sample_line_randomization(spec: &LineRandomizationSpec, trial: u64) -> Result<SpectralField> {
    spec.periodization()?;
    let fb = *spec.base_coeffs.freq_box();
    let mut stream = GaussianStream::new(spec.master_seed, trial);
    let mut out = SpectralField::zeros(fb);
    for (i, c) in spec.base_coeffs.coeffs().iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let xi = spec.frequency_of(fb.mode_at(i));
        let mix: Complex64 = psi_weights(xi, fb.dim())
            .into_iter()
            .map(|(cell, w)| stream.gaussian_at(cell_index(cell)) * w)
            .sum();
        out.coeffs_mut()[i] = mix * c;
    }
    Ok(out)
}

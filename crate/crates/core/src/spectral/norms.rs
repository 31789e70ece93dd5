use serde::{Deserialize, Serialize};

use super::{in_dyadic_shell, mode_norm_sq, GridField, SpectralField};
use crate::error::{Error, Result};

/// Japanese bracket `⟨x⟩ = (1 + x²)^{1/2}`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Energy `Σ_{M/2 < |n| ≤ M} |f̂(n)|²` of one dyadic shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellEnergy {
    pub shell: u64,
    pub energy: f64,
}

impl SpectralField {
    /// `(Σ_n ⟨ξ_n⟩^{2s} |f̂(n)|²)^{1/2}` with `ξ_n = (2π/L) n`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let fb = *self.freq_box();
        self.coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| (1.0 + fb.wavenumber_sq(fb.mode_at(i))).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Dyadic shell energies for `M = 1, 2, 4, …` up to the first shell covering the box.
    /// The zero mode is not part of any shell.
    pub fn shell_energies(&self) -> Vec<ShellEnergy> {
        let fb = *self.freq_box();
        let top = (fb.max_radius().ceil() as u64).next_power_of_two();
        let count = top.trailing_zeros() as usize + 1;
        let mut out: Vec<ShellEnergy> =
            (0..count).map(|j| ShellEnergy { shell: 1 << j, energy: 0.0 }).collect();
        for (i, c) in self.coeffs().iter().enumerate() {
            let r2 = mode_norm_sq(fb.mode_at(i));
            if r2 == 0 {
                continue;
            }
            // smallest dyadic M with |n| ≤ M
            let j = (0..count).find(|&j| r2 <= (1i64 << j) * (1i64 << j)).expect("shell range covers box");
            debug_assert!(in_dyadic_shell(r2, 1 << j));
            out[j].energy += c.norm_sqr();
        }
        out
    }
}

/// `(⨍ |g|^p)^{1/p}` by equal-weight quadrature, or `max |g|` for `p = ∞`.
pub fn lebesgue_norm(g: &GridField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::precondition(format!("Lebesgue exponent must be ≥ 1, got {p}")));
    }
    let samples = g.samples();
    if p.is_infinite() {
        return Ok(samples.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let mean = if p == 2.0 {
        samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / samples.len() as f64
    } else {
        samples.iter().map(|v| v.norm().powf(p)).sum::<f64>() / samples.len() as f64
    };
    Ok(mean.powf(1.0 / p))
}

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{FrequencyBox, SpectralField};
use crate::error::{Error, Result};

/// Time cutoff applied before the time transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// No cutoff (periodic data).
    Flat,
    /// Equal to 1 on the middle half of the window, quintic smoothstep ramps
    /// `6r⁵ − 15r⁴ + 10r³` on the outer quarters, zero at the ends.
    Smoothstep5,
}

/// Value of the smoothstep bump at relative position `u ∈ [0, 1]`.
pub fn smoothstep_window(u: f64) -> f64 {
    let ramp = |r: f64| r * r * r * (10.0 - 15.0 * r + 6.0 * r * r);
    if !(0.0..=1.0).contains(&u) {
        0.0
    } else if u < 0.25 {
        ramp(4.0 * u)
    } else if u > 0.75 {
        ramp(4.0 * (1.0 - u))
    } else {
        1.0
    }
}

impl WindowKind {
    pub fn weight(self, u: f64) -> f64 {
        match self {
            WindowKind::Flat => 1.0,
            WindowKind::Smoothstep5 => smoothstep_window(u),
        }
    }
}

/// Space-time Fourier transform `F̂(n, τ_k)` of a windowed family of states.
///
/// The time transform is unitary: `F̂(n,τ) = (2π)^{-1/2} ∫ w(t) û(n,t) e^{-iτt} dt`,
/// so `Σ_{n,k} |F̂(n,τ_k)|² Δτ` equals the windowed energy `∫ Σ_n |w û(n,t)|² dt`.
#[derive(Debug, Clone)]
pub struct SpaceTimeSpectrum {
    freq_box: FrequencyBox,
    time_window: (f64, f64),
    taus: Vec<f64>,
    dtau: f64,
    window: WindowKind,
    /// mode-major: `coeffs[mode * time_modes + k]`
    coeffs: Vec<Complex64>,
    windowed_energy: f64,
}

impl SpaceTimeSpectrum {
    /// Build from states sampled at `t_j = t0 + j (t1 − t0)/M_t`, `j < M_t`.
    pub fn from_time_samples(
        states: &[SpectralField],
        time_window: (f64, f64),
        window: WindowKind,
    ) -> Result<Self> {
        let (t0, t1) = time_window;
        if states.len() < 2 {
            return Err(Error::precondition("need at least two time samples"));
        }
        if !(t1 > t0) {
            return Err(Error::precondition("time window must satisfy t1 > t0"));
        }
        let freq_box = *states[0].freq_box();
        if states.iter().any(|s| s.freq_box() != &freq_box) {
            return Err(Error::structure("time samples live in different boxes"));
        }
        let mt = states.len();
        let dt = (t1 - t0) / mt as f64;
        let max_k2 = freq_box.modes().map(|n| freq_box.wavenumber_sq(n)).fold(0.0, f64::max);
        if max_k2 >= PI / dt {
            return Err(Error::precondition(format!(
                "time step {dt} cannot resolve the phase e^{{-i|n|²t}} with |n|² = {max_k2}"
            )));
        }
        let weights: Vec<f64> = (0..mt).map(|j| window.weight(j as f64 / mt as f64)).collect();
        let windowed_energy = dt
            * states
                .iter()
                .zip(&weights)
                .map(|(s, w)| w * w * s.l2_norm_sq())
                .sum::<f64>();

        let fft = FftPlanner::new().plan_fft_forward(mt);
        let dtau = 2.0 * PI / (mt as f64 * dt);
        let half = (mt / 2) as i64;
        let taus: Vec<f64> = (0..mt as i64).map(|k| (k - half) as f64 * dtau).collect();
        let scale = dt / (2.0 * PI).sqrt();
        let modes = freq_box.mode_count();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); modes * mt];
        let mut buf = vec![Complex64::new(0.0, 0.0); mt];
        for idx in 0..modes {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = states[j].coeffs()[idx] * weights[j];
            }
            fft.process(&mut buf);
            for (k, &tau) in taus.iter().enumerate() {
                let bin = (k as i64 - half).rem_euclid(mt as i64) as usize;
                coeffs[idx * mt + k] = buf[bin] * Complex64::from_polar(scale, -tau * t0);
            }
        }
        Ok(Self { freq_box, time_window, taus, dtau, window, coeffs, windowed_energy })
    }

    /// Assemble directly from coefficients on a uniform `τ` grid.
    pub fn from_parts(
        freq_box: FrequencyBox,
        time_window: (f64, f64),
        taus: Vec<f64>,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if taus.len() < 2 {
            return Err(Error::precondition("need at least two dual time frequencies"));
        }
        let dtau = taus[1] - taus[0];
        if !(dtau > 0.0) || taus.windows(2).any(|w| ((w[1] - w[0]) - dtau).abs() > 1e-9 * dtau.abs()) {
            return Err(Error::precondition("dual time frequencies must be uniform and increasing"));
        }
        if coeffs.len() != freq_box.mode_count() * taus.len() {
            return Err(Error::structure("coefficient array must be modes × time_modes"));
        }
        let windowed_energy = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * dtau;
        Ok(Self { freq_box, time_window, taus, dtau, window: WindowKind::Flat, coeffs, windowed_energy })
    }

    pub fn freq_box(&self) -> &FrequencyBox {
        &self.freq_box
    }

    pub fn time_window(&self) -> (f64, f64) {
        self.time_window
    }

    pub fn time_modes(&self) -> usize {
        self.taus.len()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, mode_index: usize, k: usize) -> Complex64 {
        self.coeffs[mode_index * self.time_modes() + k]
    }

    /// `∫ Σ_n |w(t) û(n,t)|² dt` of the data the spectrum was built from.
    pub fn windowed_energy(&self) -> f64 {
        self.windowed_energy
    }

    /// `Σ |F̂|² Δτ`.
    pub fn spectral_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dtau
    }

    /// Discrete `X^{s,b}` norm `(Σ ⟨τ + |ξ_n|²⟩^{2b} ⟨ξ_n⟩^{2s} |F̂(n,τ)|² Δτ)^{1/2}`.
    pub fn xsb_norm(&self, s: f64, b: f64) -> f64 {
        let mt = self.time_modes();
        let fb = self.freq_box;
        let mut total = 0.0;
        for idx in 0..fb.mode_count() {
            let k2 = fb.wavenumber_sq(fb.mode_at(idx));
            let space_weight = (1.0 + k2).powf(s);
            for (k, &tau) in self.taus.iter().enumerate() {
                let c = self.coeffs[idx * mt + k];
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let res = tau + k2;
                total += (1.0 + res * res).powf(b) * space_weight * c.norm_sqr();
            }
        }
        (total * self.dtau).sqrt()
    }
}

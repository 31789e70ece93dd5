//! Free and nonlinear Schrödinger propagation of spectral fields.
//!
//! Sign conventions follow `i ∂_t u + Δu = 𝒩(u)`: the free flow multiplies
//! `û(n)` by `e^{-i|ξ_n|² t}`, and a defocusing nonlinearity carries the `+` sign.

mod flow;
mod nonlinearity;

pub use flow::{duhamel_part, evolve, evolve_with, FlowConfig, FlowStepper, Scheme, Trajectory};
pub use nonlinearity::{
    nonlinearity_eval, nonlinearity_eval_restricted, restricted_parts, NonlinearityEvaluator,
    RestrictedParts, RESTRICTED_TERM_GUARD,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridField, Mode, SpectralField, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `|u|²u`
    Cubic,
    /// `u(|u|² − 2μ)`, `μ = ⨍|u|²`
    WickCubic,
    /// `u(|u|⁴ − 3μ)`, `μ = ⨍|u|⁴`; one dimension only
    WickQuintic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Focusing,
    Defocusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Focusing => -1.0,
            Sign::Defocusing => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    pub sign: Sign,
}

impl NonlinearitySpec {
    pub fn new(kind: NonlinearityKind, sign: Sign) -> Self {
        Self { kind, sign }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.kind == NonlinearityKind::WickQuintic && dim != 1 {
            return Err(Error::precondition("the Wick quintic nonlinearity is only defined in d = 1"));
        }
        Ok(())
    }

    /// Highest power of `u` in the nonlinearity (3 or 5).
    pub fn degree(&self) -> usize {
        match self.kind {
            NonlinearityKind::Cubic | NonlinearityKind::WickCubic => 3,
            NonlinearityKind::WickQuintic => 5,
        }
    }
}

/// `e^{itΔ} f`: multiplies each coefficient by `e^{-i|ξ_n|² t}`.
pub fn linear_flow(f: &SpectralField, t: f64) -> SpectralField {
    let fb = *f.freq_box();
    let mut out = f.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let phase = -(fb.wavenumber_sq(fb.mode_at(i)) * t).rem_euclid(2.0 * std::f64::consts::PI);
        *c *= Complex64::from_polar(1.0, phase);
    }
    out
}

/// Multiplication by `e^{i m·x}`: shifts the spectrum by `m`.
pub fn modulate(f: &SpectralField, m: Mode) -> Result<SpectralField> {
    let fb = *f.freq_box();
    if fb.dim() == 1 && m[1] != 0 {
        return Err(Error::precondition("modulation vector has a second component in d = 1"));
    }
    let mut out = SpectralField::zeros(fb);
    for (n, c) in f.iter() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let shifted = [n[0] + m[0], n[1] + m[1]];
        let idx = fb.index_of(shifted).ok_or_else(|| {
            Error::precondition(format!("modulation by {m:?} pushes mode {n:?} outside the box"))
        })?;
        out.coeffs_mut()[idx] = c;
    }
    Ok(out)
}

/// `μ = ⨍ |u|² = Σ |û(n)|²`.
pub fn wick_mass(f: &SpectralField) -> f64 {
    f.l2_norm_sq()
}

/// Maximum grid defect of the Galilean identity
/// `e^{itΔ}(e^{im·x} f)(x) = e^{i(m·x − |m|²t)} (e^{itΔ}f)(x − 2tm)`
/// at `t = shift·h/2`, `h = L/M`, where the spatial shift is grid aligned.
pub fn galilean_defect(f: &SpectralField, m: Mode, shift: usize, points_per_axis: usize) -> Result<f64> {
    let fb = *f.freq_box();
    if (fb.domain_scale() - 2.0 * std::f64::consts::PI).abs() > 1e-12 {
        return Err(Error::precondition("grid-aligned Galilean check needs L = 2π"));
    }
    let h = fb.domain_scale() / points_per_axis as f64;
    let t = 0.5 * shift as f64 * h;
    let unit = fb.wavenumber_unit();
    let mut grid = SpectralGrid::new(fb, points_per_axis)?;
    let lhs: GridField = grid.to_grid(&linear_flow(&modulate(f, m)?, t))?;
    let base: GridField = grid.to_grid(&linear_flow(f, t))?;
    let mm = points_per_axis as i64;
    // 2t m_j is shift·m_j grid cells along axis j
    let cells = |mj: i64| mj * shift as i64;
    let m_sq = unit * unit * (m[0] * m[0] + m[1] * m[1]) as f64;
    let mut worst = 0.0f64;
    for (idx, &v) in lhs.samples().iter().enumerate() {
        let x = lhs.point(idx);
        let src = match fb.dim() {
            1 => (idx as i64 - cells(m[0])).rem_euclid(mm) as usize,
            _ => {
                let (i, j) = ((idx / points_per_axis) as i64, (idx % points_per_axis) as i64);
                let si = (i - cells(m[0])).rem_euclid(mm);
                let sj = (j - cells(m[1])).rem_euclid(mm);
                (si * mm + sj) as usize
            }
        };
        let phase = unit * (m[0] as f64 * x[0] + m[1] as f64 * x[1]) - m_sq * t;
        let rhs = Complex64::from_polar(1.0, phase) * base.samples()[src];
        worst = worst.max((v - rhs).norm());
    }
    Ok(worst)
}

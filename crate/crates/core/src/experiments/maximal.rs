use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagators::{linear_flow, FlowConfig, FlowStepper};
use crate::spectral::{GridField, SpectralField, SpectralGrid};
use crate::Complex64;

/// Sampling of the interval `[0, δ]` for sup-in-time estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub delta: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn new(delta: f64, samples: usize) -> Result<Self> {
        let grid = Self { delta, samples };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::precondition(format!("delta must be positive, got {}", self.delta)));
        }
        if self.samples < 1 {
            return Err(Error::precondition("a time grid needs at least one sample"));
        }
        Ok(())
    }

    /// Number of intervals for a field whose fastest phase rotates at `max_wavenumber²`.
    pub fn intervals(&self, max_wavenumber: f64) -> usize {
        let mut spacing = self.delta / self.samples as f64;
        if max_wavenumber > 0.0 {
            spacing = spacing.min(0.1 / (max_wavenumber * max_wavenumber));
        }
        (self.delta / spacing * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }

    /// `0 = t₀ < t₁ < … < t_m = δ`, uniform.
    pub fn times(&self, max_wavenumber: f64) -> Vec<f64> {
        let m = self.intervals(max_wavenumber);
        (0..=m).map(|j| self.delta * j as f64 / m as f64).collect()
    }
}

/// Largest `|ξ_n|` over the nonzero coefficients of `f` (0 for the zero field).
pub fn max_active_wavenumber(f: &SpectralField) -> f64 {
    let fb = *f.freq_box();
    f.iter()
        .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
        .map(|(n, _)| fb.wavenumber_sq(n))
        .fold(0.0, f64::max)
        .sqrt()
}

/// Running pointwise `sup |·|` over a family of grid fields.
#[derive(Debug, Clone)]
pub struct MaximalAccumulator {
    template: Option<GridField>,
    sup: Vec<f64>,
}

impl MaximalAccumulator {
    pub fn new() -> Self {
        Self { template: None, sup: Vec::new() }
    }

    pub fn update(&mut self, g: &GridField) -> Result<()> {
        match &self.template {
            None => {
                self.sup = g.samples().iter().map(|v| v.norm()).collect();
                self.template = Some(g.clone());
            }
            Some(t) => {
                if !t.same_grid(g) {
                    return Err(Error::structure("time samples live on different spatial grids"));
                }
                self.update_samples(g.samples());
            }
        }
        Ok(())
    }

    fn update_samples(&mut self, samples: &[Complex64]) {
        for (s, v) in self.sup.iter_mut().zip(samples) {
            *s = s.max(v.norm());
        }
    }

    /// The sup as a real-valued grid field.
    pub fn finish(self) -> Result<GridField> {
        let template = self.template.ok_or_else(|| Error::precondition("no time samples"))?;
        let samples = self.sup.into_iter().map(|s| Complex64::new(s, 0.0)).collect();
        GridField::new(*template.freq_box(), template.points_per_axis(), samples)
    }

    /// `‖sup_t |·|‖_{L²}`.
    pub fn l2_norm(&self) -> f64 {
        if self.sup.is_empty() {
            return 0.0;
        }
        (self.sup.iter().map(|s| s * s).sum::<f64>() / self.sup.len() as f64).sqrt()
    }
}

impl Default for MaximalAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

/// Pointwise `sup_t |state(x, t)|` over the supplied time samples.
pub fn maximal_function(states: &[GridField]) -> Result<GridField> {
    let mut acc = MaximalAccumulator::new();
    for g in states {
        acc.update(g)?;
    }
    acc.finish()
}

/// `(δ, ‖sup_{0≤t≤δ} |e^{itΔ}f − f|‖_{L²})` for each `δ`.
///
/// Time samples follow `TimeGrid { delta, samples }`; the spatial grid has
/// `points_per_axis` points (at least the box minimum).
pub fn linear_convergence_diag(
    f: &SpectralField,
    deltas: &[f64],
    samples: usize,
    points_per_axis: usize,
) -> Result<Vec<(f64, f64)>> {
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::precondition("deltas must be strictly decreasing"));
    }
    let mut grid = diag_grid(f, points_per_axis)?;
    let f_grid = grid.to_grid(f)?;
    let kmax = max_active_wavenumber(f);
    let mut out = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let times = TimeGrid::new(delta, samples)?.times(kmax);
        let mut acc = MaximalAccumulator::new();
        for t in times {
            let g = grid.to_grid(&linear_flow(f, t))?;
            let diff: Vec<Complex64> = g.samples().iter().zip(f_grid.samples()).map(|(a, b)| a - b).collect();
            acc.update(&GridField::new(*f.freq_box(), grid.points_per_axis(), diff)?)?;
        }
        out.push((delta, acc.l2_norm()));
    }
    Ok(out)
}

fn diag_grid(f: &SpectralField, points_per_axis: usize) -> Result<SpectralGrid> {
    let need = f.freq_box().min_grid_points();
    if points_per_axis < need {
        return Err(Error::precondition(format!(
            "grid of {points_per_axis} points per axis is undersampled (need at least {need})"
        )));
    }
    SpectralGrid::new(*f.freq_box(), points_per_axis)
}

/// `(N, ‖sup_{0≤t≤δ} |Φ^{N_ref}_t f − Φ^N_t f|‖_{L²})` for each `N`.
///
/// All truncations run in lockstep with the template's step, and are compared every
/// few steps so the comparison spacing obeys the grid rule for `N_ref`.
pub fn nonlinear_truncation_diag(
    f: &SpectralField,
    template: &FlowConfig,
    n_list: &[u64],
    n_ref: u64,
    grid: &TimeGrid,
    points_per_axis: usize,
) -> Result<Vec<(u64, f64)>> {
    grid.validate()?;
    if n_list.is_empty() {
        return Err(Error::precondition("no truncations to compare"));
    }
    if n_list.iter().any(|&n| n >= n_ref) {
        return Err(Error::precondition(format!("N_ref = {n_ref} must exceed every N in the list")));
    }
    let ref_config = template.with_truncation(n_ref)?;
    let steps = (grid.delta / template.dt() * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = grid.delta / steps as f64;
    let spacing = grid.delta / grid.intervals(n_ref as f64 * f.freq_box().wavenumber_unit()) as f64;
    let stride = ((spacing / dt).floor() as usize).max(1);

    let mut reference = FlowStepper::new(f, ref_config, dt)?;
    let mut runs = n_list
        .iter()
        .map(|&n| FlowStepper::new(f, template.with_truncation(n)?, dt))
        .collect::<Result<Vec<_>>>()?;
    let mut space = diag_grid(f, points_per_axis)?;
    let mut sups = vec![vec![0.0f64; space.len()]; n_list.len()];
    let mut ref_buf = vec![Complex64::new(0.0, 0.0); space.len()];
    let mut buf = ref_buf.clone();

    let tag = |e: Error, n: u64| match e {
        Error::BlowUp { time, reason } => Error::BlowUp { time, reason: format!("truncation N = {n}: {reason}") },
        other => other,
    };
    for step in 0..=steps {
        if step > 0 {
            reference.step().map_err(|e| tag(e, n_ref))?;
            for (run, &n) in runs.iter_mut().zip(n_list) {
                run.step().map_err(|e| tag(e, n))?;
            }
        }
        if step % stride != 0 && step != steps {
            continue;
        }
        space.synthesize(reference.state().coeffs(), &mut ref_buf);
        for (run, sup) in runs.iter().zip(sups.iter_mut()) {
            space.synthesize(run.state().coeffs(), &mut buf);
            for ((s, a), b) in sup.iter_mut().zip(&ref_buf).zip(&buf) {
                *s = s.max((a - b).norm());
            }
        }
    }
    Ok(n_list
        .iter()
        .zip(sups)
        .map(|(&n, sup)| (n, (sup.iter().map(|s| s * s).sum::<f64>() / sup.len() as f64).sqrt()))
        .collect())
}

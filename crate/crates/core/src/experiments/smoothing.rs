use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::linear_regression;
use crate::error::{Error, Result};
use crate::propagators::{evolve_with, linear_flow, FlowConfig};
use crate::random::{sample_torus_data, TorusEnsembleSpec};
use crate::spectral::SpectralField;

/// Smallest dyadic shell entering the slope fits.
pub const MIN_SHELL: u64 = 4;
pub const MIN_SHELLS: usize = 4;
pub const MIN_R_SQUARED: f64 = 0.8;

#[derive(Debug, Clone)]
pub enum SmoothingData {
    /// A fixed datum and its nominal regularity `s`.
    Deterministic { field: SpectralField, regularity: f64 },
    /// Gaussian data; the regularity is the ensemble's `α`.
    Ensemble(TorusEnsembleSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSlope {
    pub slope: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub data_regularity: f64,
    /// `None` when the slope is undefined (an empty shell in the fit range)
    pub shell_slope_data: Option<f64>,
    pub shell_slope_duhamel: Option<f64>,
    /// `(slope_data − slope_duhamel)/2`
    pub sigma_eff: Option<f64>,
    pub r_squared_data: Option<f64>,
    pub r_squared_duhamel: Option<f64>,
    pub shells: Vec<u64>,
    pub ensemble_size: usize,
    /// trials whose slopes were defined
    pub usable_trials: usize,
    pub failed_trials: usize,
    pub reliable: bool,
}

/// Log-log slope of the dyadic shell energies `E_M`, `MIN_SHELL ≤ M ≤ n`; `None` if a
/// shell in range is empty.
pub fn shell_slope(f: &SpectralField, n: u64) -> Option<ShellSlope> {
    let shells: Vec<_> = f.shell_energies().into_iter().filter(|s| s.shell >= MIN_SHELL && s.shell <= n).collect();
    if shells.len() < 2 || shells.iter().any(|s| !(s.energy > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = shells.iter().map(|s| (s.shell as f64).ln()).collect();
    let ys: Vec<f64> = shells.iter().map(|s| s.energy.ln()).collect();
    let (slope, _, r_squared) = linear_regression(&xs, &ys);
    Some(ShellSlope { slope, r_squared })
}

fn fit_shells(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut m = MIN_SHELL;
    while m <= n {
        out.push(m);
        m *= 2;
    }
    out
}

/// Slopes of `P_{≤N} f` and of the Duhamel part `Φ^N_t f − e^{itΔ} P_{≤N} f` at `t_probe`.
fn trial_slopes(f: &SpectralField, config: &FlowConfig, t_probe: f64) -> Result<Option<(ShellSlope, ShellSlope)>> {
    let n = config.truncation_n();
    let start = f.project_ball(n);
    let stepper = evolve_with(f, *config, t_probe, |_, _| {})?;
    let duhamel = stepper.state().sub(&linear_flow(&start, stepper.time()))?;
    Ok(shell_slope(&start, n).zip(shell_slope(&duhamel, n)))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 { values[k / 2] } else { 0.5 * (values[k / 2 - 1] + values[k / 2]) }
}

/// Effective regularity gain of the Duhamel part over the datum, from `E_M ~ M^{−2r}`.
///
/// Ensembles use the median of per-trial slopes; a blown-up trial is counted and skipped.
pub fn smoothing_estimate(
    data: &SmoothingData,
    config: &FlowConfig,
    t_probe: f64,
    ensemble: usize,
) -> Result<SmoothingReport> {
    if !(t_probe > 0.0 && t_probe.is_finite()) {
        return Err(Error::precondition(format!("t_probe must be positive, got {t_probe}")));
    }
    let (regularity, outcomes) = match data {
        SmoothingData::Deterministic { field, regularity } => (*regularity, vec![trial_slopes(field, config, t_probe)?]),
        SmoothingData::Ensemble(spec) => {
            spec.validate()?;
            if ensemble < 1 {
                return Err(Error::precondition("ensemble must have at least one trial"));
            }
            let outcomes: Vec<Result<Option<(ShellSlope, ShellSlope)>>> = (0..ensemble as u64)
                .into_par_iter()
                .map(|trial| trial_slopes(&sample_torus_data(spec, trial)?, config, t_probe))
                .collect();
            let mut kept = Vec::with_capacity(ensemble);
            for o in outcomes {
                match o {
                    Err(Error::BlowUp { .. }) => kept.push(Err(())),
                    Err(e) => return Err(e),
                    Ok(v) => kept.push(Ok(v)),
                }
            }
            let failed = kept.iter().filter(|k| k.is_err()).count();
            if failed == ensemble {
                return Err(Error::BlowUp { time: t_probe, reason: "every trial blew up".into() });
            }
            (spec.alpha, kept.into_iter().filter_map(|k| k.ok()).collect())
        }
    };
    let trials = outcomes.len();
    let ensemble_size = match data {
        SmoothingData::Deterministic { .. } => 1,
        SmoothingData::Ensemble(_) => ensemble,
    };
    let defined: Vec<(ShellSlope, ShellSlope)> = outcomes.into_iter().flatten().collect();
    let shells = fit_shells(config.truncation_n());
    let mut report = SmoothingReport {
        data_regularity: regularity,
        shell_slope_data: None,
        shell_slope_duhamel: None,
        sigma_eff: None,
        r_squared_data: None,
        r_squared_duhamel: None,
        shells: shells.clone(),
        ensemble_size,
        usable_trials: defined.len(),
        failed_trials: ensemble_size - trials,
        reliable: false,
    };
    if defined.is_empty() {
        return Ok(report);
    }
    let pick = |f: fn(&(ShellSlope, ShellSlope)) -> f64| median(&mut defined.iter().map(f).collect::<Vec<_>>());
    let a = pick(|t| t.0.slope);
    let b = pick(|t| t.1.slope);
    let ra = pick(|t| t.0.r_squared);
    let rb = pick(|t| t.1.r_squared);
    report.shell_slope_data = Some(a);
    report.shell_slope_duhamel = Some(b);
    report.sigma_eff = Some((a - b) / 2.0);
    report.r_squared_data = Some(ra);
    report.r_squared_duhamel = Some(rb);
    report.reliable =
        shells.len() >= MIN_SHELLS && ra >= MIN_R_SQUARED && rb >= MIN_R_SQUARED && defined.len() == trials;
    Ok(report)
}

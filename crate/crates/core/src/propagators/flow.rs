use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{linear_flow, NonlinearityEvaluator, NonlinearityKind, NonlinearitySpec};
use crate::error::{Error, Result};
use crate::spectral::{mode_norm_sq, SpectralField, SpectralGrid};

/// Relative mass drift above which a run is declared blown up.
const BLOW_UP_MASS_DRIFT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StrangSplitting,
    IntegratingFactorRk4,
}

/// One Galerkin-truncated evolution `i∂_t u + Δu = P_{≤N} 𝒩(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    truncation_n: u64,
    nonlinearity: NonlinearitySpec,
    dt: f64,
    scheme: Scheme,
    store_every: usize,
}

impl FlowConfig {
    /// Fails unless `0 < dt ≤ 0.5 N⁻²`, `N ≥ 1` and `store_every ≥ 1`.
    pub fn new(
        truncation_n: u64,
        nonlinearity: NonlinearitySpec,
        dt: f64,
        scheme: Scheme,
        store_every: usize,
    ) -> Result<Self> {
        if truncation_n < 1 {
            return Err(Error::precondition("truncation N must be at least 1"));
        }
        let limit = Self::max_dt(truncation_n);
        if !(dt > 0.0 && dt <= limit) {
            return Err(Error::precondition(format!(
                "dt = {dt} violates the stability rule dt ≤ 0.5·N⁻² = {limit:e} for N = {truncation_n}"
            )));
        }
        if store_every < 1 {
            return Err(Error::precondition("store_every must be at least 1"));
        }
        Ok(Self { truncation_n, nonlinearity, dt, scheme, store_every })
    }

    /// Largest admissible step `0.5 N⁻²`.
    pub fn max_dt(truncation_n: u64) -> f64 {
        0.5 / (truncation_n as f64 * truncation_n as f64)
    }

    pub fn truncation_n(&self) -> u64 {
        self.truncation_n
    }

    pub fn nonlinearity(&self) -> NonlinearitySpec {
        self.nonlinearity
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn store_every(&self) -> usize {
        self.store_every
    }

    pub fn with_truncation(&self, truncation_n: u64) -> Result<Self> {
        Self::new(truncation_n, self.nonlinearity, self.dt, self.scheme, self.store_every)
    }
}

/// Time-stepper for the truncated flow. Holds all FFT plans and work buffers.
#[derive(Debug)]
pub struct FlowStepper {
    config: FlowConfig,
    dt: f64,
    state: SpectralField,
    time: f64,
    steps_taken: usize,
    in_ball: Vec<bool>,
    half_phase: Vec<Complex64>,
    full_phase: Vec<Complex64>,
    grid: SpectralGrid,
    evaluator: NonlinearityEvaluator,
    buf: Vec<Complex64>,
    stages: [Vec<Complex64>; 5],
    previous: Vec<Complex64>,
    initial_mass: f64,
    wide: bool,
}

impl FlowStepper {
    /// Stepper starting from `P_{≤N} f0` with step `dt` (which may be smaller than
    /// `config.dt()`, never larger).
    pub fn new(f0: &SpectralField, config: FlowConfig, dt: f64) -> Result<Self> {
        let fb = *f0.freq_box();
        let spec = config.nonlinearity;
        spec.check_dim(fb.dim())?;
        if !(dt > 0.0 && dt <= config.dt * (1.0 + 1e-12)) {
            return Err(Error::precondition(format!("step {dt} exceeds the configured dt {}", config.dt)));
        }
        if !f0.is_finite() {
            return Err(Error::precondition("initial datum is not finite"));
        }
        let r2 = (config.truncation_n as i64).saturating_mul(config.truncation_n as i64);
        let in_ball: Vec<bool> = fb.modes().map(|n| mode_norm_sq(n) <= r2).collect();
        let phase = |i: usize, tau: f64| {
            let w = (fb.wavenumber_sq(fb.mode_at(i)) * tau).rem_euclid(2.0 * std::f64::consts::PI);
            Complex64::from_polar(1.0, -w)
        };
        let half_phase = (0..fb.mode_count()).map(|i| phase(i, 0.5 * dt)).collect();
        let full_phase = (0..fb.mode_count()).map(|i| phase(i, dt)).collect();
        let factor = (spec.degree() + 1) / 2;
        let grid = SpectralGrid::padded(fb, factor)?;
        let buf = vec![Complex64::new(0.0, 0.0); grid.len()];
        let zeros = vec![Complex64::new(0.0, 0.0); fb.mode_count()];
        let state = f0.project_ball(config.truncation_n);
        let initial_mass = state.l2_norm_sq();
        Ok(Self {
            config,
            dt,
            state,
            time: 0.0,
            steps_taken: 0,
            in_ball,
            half_phase,
            full_phase,
            grid,
            evaluator: NonlinearityEvaluator::new(fb, spec)?,
            buf,
            previous: zeros.clone(),
            stages: [zeros.clone(), zeros.clone(), zeros.clone(), zeros.clone(), zeros],
            initial_mass,
            wide: wide_simd(),
        })
    }

    pub fn state(&self) -> &SpectralField {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn initial_mass(&self) -> f64 {
        self.initial_mass
    }

    /// Advance by one step; on failure the state is left at the last valid time.
    pub fn step(&mut self) -> Result<()> {
        #[cfg(target_arch = "x86_64")]
        if self.wide {
            // SAFETY: `wide` is only set when the CPU reports AVX2 and FMA
            return unsafe { self.step_wide() };
        }
        self.step_portable()
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2,fma")]
    unsafe fn step_wide(&mut self) -> Result<()> {
        self.step_portable()
    }

    #[inline(always)]
    fn step_portable(&mut self) -> Result<()> {
        self.previous.copy_from_slice(self.state.coeffs());
        let mass = match self.config.scheme {
            Scheme::StrangSplitting => self.strang_step(),
            Scheme::IntegratingFactorRk4 => {
                self.rk4_step();
                self.state.l2_norm_sq()
            }
        };
        let next_time = (self.steps_taken + 1) as f64 * self.dt;
        // a NaN or infinite coefficient makes the mass non-finite
        let blown = if !mass.is_finite() {
            Some("non-finite coefficients".to_string())
        } else if (mass - self.initial_mass).abs() > BLOW_UP_MASS_DRIFT * self.initial_mass.max(f64::MIN_POSITIVE) {
            Some(format!("mass drift {:e} exceeds {BLOW_UP_MASS_DRIFT:e}", (mass - self.initial_mass) / self.initial_mass))
        } else {
            None
        };
        if let Some(reason) = blown {
            self.state.coeffs_mut().copy_from_slice(&self.previous);
            return Err(Error::BlowUp { time: self.time, reason });
        }
        self.steps_taken += 1;
        self.time = next_time;
        Ok(())
    }

    /// One splitting step; returns the new mass.
    #[inline(always)]
    fn strang_step(&mut self) -> f64 {
        let sign = self.config.nonlinearity.sign.value();
        let dt = self.dt;
        let coeffs = self.state.coeffs_mut();
        self.grid.synthesize_weighted(coeffs, &self.half_phase, &mut self.buf);
        // i u_t = sign·(|u|^{p−1} − cμ) u keeps |u| fixed pointwise, so the substep is a
        // pure phase rotation; μ is frozen at its initial value for the cubic Wick term
        match self.config.nonlinearity.kind {
            NonlinearityKind::Cubic => rotate(&mut self.buf, |r2| -sign * r2 * dt),
            NonlinearityKind::WickCubic => {
                let mu = self.initial_mass;
                rotate(&mut self.buf, |r2| -sign * (r2 - 2.0 * mu) * dt)
            }
            NonlinearityKind::WickQuintic => {
                let mu = self.buf.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() / self.buf.len() as f64;
                rotate(&mut self.buf, |r2| -sign * (r2 * r2 - 3.0 * mu) * dt)
            }
        }
        let (half_phase, in_ball) = (&self.half_phase, &self.in_ball);
        let mut mass = 0.0;
        self.grid.analyze_with(&mut self.buf, |i, c| {
            let c = if in_ball[i] { c * half_phase[i] } else { Complex64::new(0.0, 0.0) };
            mass += c.norm_sqr();
            coeffs[i] = c;
        });
        mass
    }

    /// `−i P_{≤N} 𝒩(u)` into `out`.
    fn rhs(evaluator: &mut NonlinearityEvaluator, in_ball: &[bool], u: &[Complex64], out: &mut [Complex64]) {
        evaluator.eval_into(u, out);
        for (o, &keep) in out.iter_mut().zip(in_ball) {
            *o = if keep { Complex64::new(o.im, -o.re) } else { Complex64::new(0.0, 0.0) };
        }
    }

    fn rk4_step(&mut self) {
        let h = self.dt;
        let e1 = &self.half_phase;
        let e2 = &self.full_phase;
        let [ka, kb, kc, kd, tmp] = &mut self.stages;
        let u = self.state.coeffs_mut();
        Self::rhs(&mut self.evaluator, &self.in_ball, u, ka);
        for i in 0..u.len() {
            tmp[i] = e1[i] * (u[i] + 0.5 * h * ka[i]);
        }
        Self::rhs(&mut self.evaluator, &self.in_ball, tmp, kb);
        for i in 0..u.len() {
            tmp[i] = e1[i] * u[i] + 0.5 * h * kb[i];
        }
        Self::rhs(&mut self.evaluator, &self.in_ball, tmp, kc);
        for i in 0..u.len() {
            tmp[i] = e2[i] * u[i] + h * e1[i] * kc[i];
        }
        Self::rhs(&mut self.evaluator, &self.in_ball, tmp, kd);
        for i in 0..u.len() {
            u[i] = e2[i] * u[i] + h / 6.0 * (e2[i] * ka[i] + 2.0 * e1[i] * (kb[i] + kc[i]) + kd[i]);
        }
    }
}

fn wide_simd() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

const SERIES_MAX_ANGLE: f64 = 0.1;

/// `e^{iθ}` for `|θ| ≤ 0.1` by truncated Taylor series.
#[inline(always)]
fn small_rotation(theta: f64) -> Complex64 {
    // remainders θ¹¹/11! and θ¹²/12! are below 1e-18 for |θ| ≤ 0.1
    const C: [f64; 5] = [-1.0 / 2.0, 1.0 / 24.0, -1.0 / 720.0, 1.0 / 40320.0, -1.0 / 3628800.0];
    const S: [f64; 4] = [-1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0, 1.0 / 362880.0];
    let t2 = theta * theta;
    let cos = 1.0 + t2 * (C[0] + t2 * (C[1] + t2 * (C[2] + t2 * (C[3] + t2 * C[4]))));
    let sin = theta * (1.0 + t2 * (S[0] + t2 * (S[1] + t2 * (S[2] + t2 * S[3]))));
    Complex64::new(cos, sin)
}

const TINY_ANGLE: f64 = 1e-3;

/// `e^{iθ}` for `|θ| ≤ 1e-3`, where the remainders θ⁶/6! and θ⁷/7! are below 1e-20.
#[inline(always)]
fn tiny_rotation(theta: f64) -> Complex64 {
    let t2 = theta * theta;
    let cos = 1.0 + t2 * (-1.0 / 2.0 + t2 * (1.0 / 24.0));
    let sin = theta * (1.0 + t2 * (-1.0 / 6.0 + t2 * (1.0 / 120.0)));
    Complex64::new(cos, sin)
}

/// `v ← e^{iθ(|v|²)} v` at every sample.
#[inline(always)]
fn rotate(buf: &mut [Complex64], theta: impl Fn(f64) -> f64) {
    // θ is monotone in |v|² ≥ 0, so its extremes sit at the extreme moduli
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in buf.iter() {
        let r2 = v.norm_sqr();
        lo = lo.min(r2);
        hi = hi.max(r2);
    }
    let largest = theta(lo).abs().max(theta(hi).abs());
    if largest <= TINY_ANGLE {
        for v in buf.iter_mut() {
            *v *= tiny_rotation(theta(v.norm_sqr()));
        }
    } else if largest <= SERIES_MAX_ANGLE {
        for v in buf.iter_mut() {
            *v *= small_rotation(theta(v.norm_sqr()));
        }
    } else {
        for v in buf.iter_mut() {
            *v *= Complex64::from_polar(1.0, theta(v.norm_sqr()));
        }
    }
}

/// Stored states of one truncated evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: FlowConfig,
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
}

impl Trajectory {
    pub fn masses(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.l2_norm_sq()).collect()
    }

    /// `max_t |M(t) − M(0)| / M(0)`; zero for the zero trajectory.
    pub fn max_relative_mass_drift(&self) -> f64 {
        let m0 = self.states[0].l2_norm_sq();
        if m0 == 0.0 {
            return 0.0;
        }
        self.masses().iter().map(|m| (m - m0).abs() / m0).fold(0.0, f64::max)
    }

    /// Writes `trajectory.json` (`{config, times}`), one binary record per stored state
    /// and `summary.csv` with mass and the requested `H^s` norms. Returns the paths written.
    pub fn export(&self, dir: &Path, sobolev_indices: &[f64]) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let manifest = serde_json::json!({ "config": self.config, "times": self.times });
        let path = dir.join("trajectory.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        written.push(path);
        for (i, s) in self.states.iter().enumerate() {
            let path = dir.join(format!("state_{i:06}.spec"));
            std::fs::write(&path, s.to_binary())?;
            written.push(path);
        }
        let path = dir.join("summary.csv");
        let mut csv = std::fs::File::create(&path)?;
        write!(csv, "time,mass")?;
        for s in sobolev_indices {
            write!(csv, ",h{s}")?;
        }
        writeln!(csv)?;
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(csv, "{t},{}", state.l2_norm_sq())?;
            for &s in sobolev_indices {
                write!(csv, ",{}", state.sobolev_norm(s))?;
            }
            writeln!(csv)?;
        }
        written.push(path);
        Ok(written)
    }
}

/// Runs the truncated flow to `t_final`, calling `observe(t, state)` at `t = 0` and after
/// every step. The step is `t_final / ⌈t_final / dt⌉ ≤ dt` so the run ends exactly at `t_final`.
pub fn evolve_with(
    f0: &SpectralField,
    config: FlowConfig,
    t_final: f64,
    mut observe: impl FnMut(f64, &SpectralField),
) -> Result<FlowStepper> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::precondition(format!("t_final must be positive, got {t_final}")));
    }
    let steps = (t_final / config.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut stepper = FlowStepper::new(f0, config, t_final / steps as f64)?;
    observe(0.0, stepper.state());
    for _ in 0..steps {
        stepper.step()?;
        observe(stepper.time(), stepper.state());
    }
    Ok(stepper)
}

/// Runs the truncated flow and keeps every `store_every`-th state (and the final one).
pub fn evolve(f0: &SpectralField, config: FlowConfig, t_final: f64) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut count = 0usize;
    let stepper = evolve_with(f0, config, t_final, |t, s| {
        if count % config.store_every == 0 {
            times.push(t);
            states.push(s.clone());
        }
        count += 1;
    })?;
    if *times.last().expect("initial state stored") < stepper.time() {
        times.push(stepper.time());
        states.push(stepper.state().clone());
    }
    Ok(Trajectory { config, times, states })
}

/// `w^N(t) = Φ^N_t f − e^{itΔ} P_{≤N} f` at every stored time.
pub fn duhamel_part(traj: &Trajectory) -> Vec<SpectralField> {
    let initial = &traj.states[0];
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            if t == 0.0 {
                SpectralField::zeros(*s.freq_box())
            } else {
                s.sub(&linear_flow(initial, t)).expect("states share one box")
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagators::Sign;
    use crate::spectral::FrequencyBox;

    #[test]
    fn rotation_matches_from_polar() {
        for k in -270..=270 {
            let theta = k as f64 * 3.7e-4;
            let diff = small_rotation(theta) - Complex64::from_polar(1.0, theta);
            assert!(diff.norm() < 2e-16, "theta {theta}: {diff}");
        }
        for k in -100..=100 {
            let theta = k as f64 * 1e-5;
            let diff = tiny_rotation(theta) - Complex64::from_polar(1.0, theta);
            assert!(diff.norm() < 2e-16, "theta {theta}: {diff}");
        }
        let mut buf = vec![Complex64::new(0.03, -0.04); 2];
        rotate(&mut buf, |r2| r2 - 0.002);
        assert!((buf[1] - Complex64::new(0.03, -0.04) * Complex64::from_polar(1.0, 0.0025 - 0.002)).norm() < 1e-17);
        let mut buf = vec![Complex64::new(0.6, 0.8); 3];
        rotate(&mut buf, |r2| 2.0 * r2);
        assert_eq!(buf[0], Complex64::new(0.6, 0.8) * Complex64::from_polar(1.0, 2.0));
    }

    fn wick(sign: Sign) -> NonlinearitySpec {
        NonlinearitySpec::new(NonlinearityKind::WickCubic, sign)
    }

    #[test]
    fn dt_rule_enforced() {
        assert!(FlowConfig::new(10, wick(Sign::Defocusing), 0.005, Scheme::StrangSplitting, 1).is_ok());
        assert!(matches!(
            FlowConfig::new(10, wick(Sign::Defocusing), 0.0051, Scheme::StrangSplitting, 1),
            Err(Error::Precondition(_))
        ));
        assert!(FlowConfig::new(10, wick(Sign::Defocusing), 0.001, Scheme::StrangSplitting, 0).is_err());
    }

    #[test]
    fn plane_wave_closed_form() {
        // u = 2 e^{ix} solves the defocusing Wick flow as 2 e^{i(x + 3t)}
        let fb = FrequencyBox::new(1, 4).unwrap();
        let f0 = SpectralField::single_mode(fb, [1, 0], Complex64::new(2.0, 0.0)).unwrap();
        for scheme in [Scheme::StrangSplitting, Scheme::IntegratingFactorRk4] {
            let cfg = FlowConfig::new(4, wick(Sign::Defocusing), 1e-3, scheme, 100).unwrap();
            let traj = evolve(&f0, cfg, 0.5).unwrap();
            let last = traj.states.last().unwrap();
            let want = SpectralField::single_mode(fb, [1, 0], Complex64::from_polar(2.0, 1.5)).unwrap();
            assert!(last.max_abs_diff(&want).unwrap() <= 1e-8, "{scheme:?}");
            let w = duhamel_part(&traj);
            assert_eq!(w[0].max_abs(), 0.0);
            let t = *traj.times.last().unwrap();
            let expected = Complex64::from_polar(2.0, 3.0 * t) - Complex64::from_polar(2.0, -t);
            assert!((w.last().unwrap().coeff([1, 0]) - expected).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_datum_stays_zero() {
        let fb = FrequencyBox::new(2, 3).unwrap();
        let cfg = FlowConfig::new(3, wick(Sign::Focusing), 0.01, Scheme::StrangSplitting, 1).unwrap();
        let traj = evolve(&SpectralField::zeros(fb), cfg, 0.1).unwrap();
        assert!(traj.states.iter().all(|s| s.max_abs() == 0.0));
        assert_eq!(traj.max_relative_mass_drift(), 0.0);
    }

    #[test]
    fn cubic_and_wick_differ_by_a_global_phase() {
        let fb = FrequencyBox::new(1, 8).unwrap();
        let f0 = SpectralField::from_fn(fb, |n| Complex64::new(0.4 / (1.0 + (n[0] * n[0]) as f64), 0.1 * n[0] as f64 / 8.0));
        let mu = f0.project_ball(8).l2_norm_sq();
        for scheme in [Scheme::StrangSplitting, Scheme::IntegratingFactorRk4] {
            let plain = FlowConfig::new(8, NonlinearitySpec::new(NonlinearityKind::Cubic, Sign::Defocusing), 1e-3, scheme, 50).unwrap();
            let wick_cfg = FlowConfig::new(8, wick(Sign::Defocusing), 1e-3, scheme, 50).unwrap();
            let a = evolve(&f0, plain, 0.2).unwrap();
            let b = evolve(&f0, wick_cfg, 0.2).unwrap();
            for ((t, sa), sb) in a.times.iter().zip(&a.states).zip(&b.states) {
                let rotated = sa.scale(Complex64::from_polar(1.0, 2.0 * mu * t));
                assert!(rotated.max_abs_diff(sb).unwrap() < 1e-8, "{scheme:?} t={t}");
            }
        }
    }

    #[test]
    fn schemes_agree_to_second_order() {
        // low modes only, so the nonlinear products stay inside the ball
        let fb = FrequencyBox::new(1, 24).unwrap();
        let f0 = SpectralField::from_fn(fb, |n| {
            if n[0].abs() <= 2 { Complex64::new(0.6 / (1.0 + n[0].abs() as f64), 0.2 * n[0] as f64) } else { Complex64::new(0.0, 0.0) }
        });
        let mut last = None;
        for k in 0..3 {
            let dt = 8e-4 / (1 << k) as f64;
            let run = |scheme| evolve(&f0, FlowConfig::new(24, wick(Sign::Focusing), dt, scheme, 1 << 20).unwrap(), 0.2).unwrap();
            let (a, b) = (run(Scheme::StrangSplitting), run(Scheme::IntegratingFactorRk4));
            let gap = a.states.last().unwrap().max_abs_diff(b.states.last().unwrap()).unwrap();
            if let Some(prev) = last {
                assert!(prev / gap >= 3.5, "ratio {}", prev / gap);
            }
            last = Some(gap);
        }
    }

    #[test]
    fn trajectory_export_layout() {
        let fb = FrequencyBox::new(1, 3).unwrap();
        let f0 = SpectralField::single_mode(fb, [1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let cfg = FlowConfig::new(3, wick(Sign::Defocusing), 0.01, Scheme::StrangSplitting, 5).unwrap();
        let traj = evolve(&f0, cfg, 0.1).unwrap();
        let dir = std::env::temp_dir().join(format!("displab-traj-{}", std::process::id()));
        let files = traj.export(&dir, &[0.0, 1.0]).unwrap();
        assert_eq!(files.len(), traj.states.len() + 2);
        let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
        assert!(csv.starts_with("time,mass,h0,h1\n"));
        let rec = std::fs::read(dir.join("state_000001.spec")).unwrap();
        assert_eq!(SpectralField::from_binary(&rec).unwrap(), traj.states[1]);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

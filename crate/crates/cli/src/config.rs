use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use displab::experiments::{strichartz_admissible_p, CounterexampleGrid, TimeGrid, MIN_TAIL_SAMPLES};
use displab::propagators::{FlowConfig, NonlinearityKind, NonlinearitySpec, Scheme, Sign};
use displab::random::TorusEnsembleSpec;
use displab::resonance::{ResonanceQuery, ShellRange};
use displab::spectral::{bracket, FrequencyBox, SpectralField};
use displab::{Complex64, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LinearConvergence,
    TruncationDiag,
    Counterexample,
    Strichartz,
    Tails,
    Smoothing,
    ResonanceCount,
    LeeCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::LinearConvergence,
        Experiment::TruncationDiag,
        Experiment::Counterexample,
        Experiment::Strichartz,
        Experiment::Tails,
        Experiment::Smoothing,
        Experiment::ResonanceCount,
        Experiment::LeeCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::LinearConvergence => "linear-convergence",
            Experiment::TruncationDiag => "truncation-diag",
            Experiment::Counterexample => "counterexample",
            Experiment::Strichartz => "strichartz",
            Experiment::Tails => "tails",
            Experiment::Smoothing => "smoothing",
            Experiment::ResonanceCount => "resonance-count",
            Experiment::LeeCheck => "lee-check",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

/// Initial datum of a single-trajectory experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    /// One draw of the Gaussian series `g_n/⟨n⟩^{d/2+α}`, `|n_j| ≤ cutoff_k`.
    Random { alpha: f64, cutoff_k: usize, #[serde(default)] trial: u64 },
    /// `⟨n⟩^{−(d/2+regularity)}` on `|n_j| ≤ cutoff_k`.
    Power { regularity: f64, cutoff_k: usize },
    PlaneWave { mode: [i64; 2], #[serde(default = "one")] amplitude: f64, cutoff_k: usize },
    Zero { cutoff_k: usize },
}

fn one() -> f64 {
    1.0
}

impl DatumSpec {
    pub fn cutoff_k(&self) -> usize {
        match *self {
            DatumSpec::Random { cutoff_k, .. }
            | DatumSpec::Power { cutoff_k, .. }
            | DatumSpec::PlaneWave { cutoff_k, .. }
            | DatumSpec::Zero { cutoff_k } => cutoff_k,
        }
    }

    /// Nominal Sobolev regularity of the datum.
    pub fn regularity(&self) -> f64 {
        match *self {
            DatumSpec::Random { alpha, .. } => alpha,
            DatumSpec::Power { regularity, .. } => regularity,
            DatumSpec::PlaneWave { .. } | DatumSpec::Zero { .. } => 0.0,
        }
    }

    pub fn build(&self, dim: usize, master_seed: u64) -> Result<SpectralField> {
        let fb = FrequencyBox::new(dim, self.cutoff_k())?;
        match *self {
            DatumSpec::Random { alpha, cutoff_k, trial } => {
                displab::random::sample_torus_data(&TorusEnsembleSpec::new(dim, alpha, cutoff_k, master_seed)?, trial)
            }
            DatumSpec::Power { regularity, .. } => {
                let decay = -(dim as f64 / 2.0 + regularity);
                Ok(SpectralField::from_fn(fb, |n| {
                    let r = ((n[0] * n[0] + n[1] * n[1]) as f64).sqrt();
                    Complex64::new(bracket(r).powf(decay), 0.0)
                }))
            }
            DatumSpec::PlaneWave { mode, amplitude, .. } => {
                SpectralField::single_mode(fb, mode, Complex64::new(amplitude, 0.0))
            }
            DatumSpec::Zero { .. } => Ok(SpectralField::zeros(fb)),
        }
    }

    fn check(&self, dim: usize, out: &mut Vec<String>, at: &str) {
        if self.cutoff_k() < 1 {
            out.push(format!("{at}: cutoff_k must be at least 1"));
        }
        match *self {
            DatumSpec::Random { alpha, .. } if !alpha.is_finite() => out.push(format!("{at}: alpha must be finite")),
            DatumSpec::Power { regularity, .. } if !regularity.is_finite() => {
                out.push(format!("{at}: regularity must be finite"))
            }
            DatumSpec::PlaneWave { mode, amplitude, cutoff_k } => {
                if !amplitude.is_finite() {
                    out.push(format!("{at}: amplitude must be finite"));
                }
                let k = cutoff_k as i64;
                if mode[0].abs() > k || mode[1].abs() > k || (dim == 1 && mode[1] != 0) {
                    out.push(format!("{at}: mode {mode:?} outside the frequency box"));
                }
            }
            _ => {}
        }
    }
}

/// Nonlinearity and time stepping of a truncated flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub nonlinearity: NonlinearityKind,
    pub sign: Sign,
    pub scheme: Scheme,
    /// defaults to the largest admissible step for the finest truncation
    pub dt: Option<f64>,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self { nonlinearity: NonlinearityKind::WickCubic, sign: Sign::Defocusing, scheme: Scheme::StrangSplitting, dt: None }
    }
}

impl FlowSection {
    pub fn spec(&self) -> NonlinearitySpec {
        NonlinearitySpec::new(self.nonlinearity, self.sign)
    }

    pub fn config(&self, n: u64) -> Result<FlowConfig> {
        FlowConfig::new(n, self.spec(), self.dt.unwrap_or(FlowConfig::max_dt(n)), self.scheme, 1)
    }

    fn check(&self, dim: usize, n: u64, out: &mut Vec<String>, at: &str) {
        if let Err(e) = self.spec().check_dim(dim) {
            out.push(format!("{at}: {e}"));
        }
        if let Err(e) = self.config(n) {
            out.push(format!("{at}: {e}"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConvergence {
    pub datum: DatumSpec,
    pub deltas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// defaults to the smallest alias-free grid
    #[serde(default)]
    pub points_per_axis: Option<usize>,
}

fn default_samples() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationDiag {
    pub datum: DatumSpec,
    pub n_list: Vec<u64>,
    pub n_ref: u64,
    pub delta: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub points_per_axis: Option<usize>,
    #[serde(default)]
    pub flow: FlowSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    pub kappa: f64,
    pub n_list: Vec<u64>,
    #[serde(default = "default_points_per_n")]
    pub points_per_n: usize,
    #[serde(default = "default_subdivisions")]
    pub subdivisions: usize,
}

fn default_points_per_n() -> usize {
    CounterexampleGrid::default().points_per_n
}

fn default_subdivisions() -> usize {
    CounterexampleGrid::default().subdivisions
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strichartz {
    pub n_list: Vec<u64>,
    /// defaults to the admissible exponent `2(d+2)/d`
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default = "default_random")]
    pub random: usize,
}

fn default_random() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tails {
    pub alpha: f64,
    pub cutoff_k: usize,
    pub n_list: Vec<u64>,
    pub p: f64,
    #[serde(default)]
    pub t: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Smoothing {
    /// `random` data are drawn as an ensemble; other kinds give one deterministic run
    pub datum: DatumSpec,
    pub truncation_n: u64,
    pub t_probe: f64,
    #[serde(default = "one_trial")]
    pub ensemble: usize,
    #[serde(default)]
    pub flow: FlowSection,
}

fn one_trial() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountKind {
    /// `max_{n,n₂} #R_{n,n₂}` with `n` in the `N₁` shell
    MaxR,
    /// `max_{n₃} #S_{n₃}`
    MaxSN3,
    /// `#S`
    S,
    /// `#R_n(n₁,…,n₅)` in d = 1
    Quintic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceCount {
    pub count: CountKind,
    pub mu_list: Vec<i64>,
    pub n1_list: Vec<u64>,
    /// remaining shells `N₂, N₃[, N₄, N₅]`; each defaults to `N₁`
    #[serde(default)]
    pub other_shells: Vec<u64>,
    #[serde(default = "yes")]
    pub exclusions: bool,
    /// output index of the quintic count
    #[serde(default)]
    pub target_n: i64,
}

fn yes() -> bool {
    true
}

impl ResonanceCount {
    pub fn arity(&self) -> usize {
        if self.count == CountKind::Quintic { 5 } else { 3 }
    }

    pub fn query(&self, dim: usize, mu: i64, n1: u64) -> ResonanceQuery {
        let shell = |j: usize| ShellRange::Dyadic(self.other_shells.get(j - 2).copied().unwrap_or(n1));
        let mut q = if self.arity() == 5 {
            ResonanceQuery::quintic(mu, [ShellRange::Dyadic(n1), shell(2), shell(3), shell(4), shell(5)])
        } else {
            ResonanceQuery::cubic(dim, mu, [ShellRange::Dyadic(n1), shell(2), shell(3)])
        };
        if self.count == CountKind::MaxR {
            q = q.with_output_shell(ShellRange::Dyadic(n1));
        }
        if !self.exclusions {
            q = q.without_exclusions();
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeeCheckSection {
    pub cases: usize,
    pub p_list: Vec<f64>,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    #[serde(default = "default_lee_samples")]
    pub samples: usize,
    /// fixed `α`; the minimizing `α` is used when absent
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn default_max_degree() -> usize {
    32
}

fn default_lee_samples() -> usize {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_convergence: Option<LinearConvergence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_diag: Option<TruncationDiag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strichartz: Option<Strichartz>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tails: Option<Tails>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<Smoothing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance_count: Option<ResonanceCount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lee_check: Option<LeeCheckSection>,
}

fn default_dim() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn increasing(list: &[u64]) -> bool {
    list.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every precondition the run would check, as readable violations.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !matches!(self.dim, 1 | 2) {
            out.push(format!("dim must be 1 or 2, got {}", self.dim));
            return out;
        }
        let d = self.dim;
        let missing = |out: &mut Vec<String>| out.push(format!("missing [{}] section", section_name(self.experiment)));
        match self.experiment {
            Experiment::LinearConvergence => match &self.linear_convergence {
                None => missing(&mut out),
                Some(s) => {
                    s.datum.check(d, &mut out, "linear_convergence.datum");
                    if s.deltas.is_empty() {
                        out.push("linear_convergence.deltas is empty".into());
                    }
                    if s.deltas.windows(2).any(|w| w[1] >= w[0]) {
                        out.push("linear_convergence.deltas must be strictly decreasing".into());
                    }
                    for &delta in &s.deltas {
                        if let Err(e) = TimeGrid::new(delta, s.samples) {
                            out.push(format!("linear_convergence: {e}"));
                        }
                    }
                    check_points(s.points_per_axis, d, s.datum.cutoff_k(), &mut out, "linear_convergence");
                }
            },
            Experiment::TruncationDiag => match &self.truncation_diag {
                None => missing(&mut out),
                Some(s) => {
                    s.datum.check(d, &mut out, "truncation_diag.datum");
                    if s.n_list.is_empty() || !increasing(&s.n_list) || s.n_list[0] < 1 {
                        out.push("truncation_diag.n_list must be non-empty, positive and strictly increasing".into());
                    }
                    if s.n_list.iter().any(|&n| n >= s.n_ref) {
                        out.push(format!("truncation_diag.n_ref = {} must exceed every N in n_list", s.n_ref));
                    }
                    if let Err(e) = TimeGrid::new(s.delta, s.samples) {
                        out.push(format!("truncation_diag: {e}"));
                    }
                    s.flow.check(d, s.n_ref.max(1), &mut out, "truncation_diag.flow");
                    check_points(s.points_per_axis, d, s.datum.cutoff_k(), &mut out, "truncation_diag");
                }
            },
            Experiment::Counterexample => match &self.counterexample {
                None => missing(&mut out),
                Some(s) => {
                    if d != 1 {
                        out.push("counterexample runs in dim = 1 only".into());
                    }
                    if !(s.kappa > 0.0 && s.kappa <= 0.5) {
                        out.push(format!("counterexample.kappa must lie in (0, 1/2], got {}", s.kappa));
                    }
                    if s.n_list.len() < 4 || !increasing(&s.n_list) {
                        out.push("counterexample.n_list needs at least 4 strictly increasing values".into());
                    } else if s.kappa > 0.0 && s.kappa <= 0.5 {
                        let spacing = displab::experiments::counterexample_spacing(s.n_list[0], s.kappa);
                        if spacing < 1 || s.n_list[0] < spacing {
                            out.push(format!("counterexample: N = {} is too small for kappa = {}", s.n_list[0], s.kappa));
                        }
                    }
                    let grid = CounterexampleGrid { points_per_n: s.points_per_n, subdivisions: s.subdivisions };
                    if let Err(e) = grid.validate() {
                        out.push(format!("counterexample: {e}"));
                    }
                }
            },
            Experiment::Strichartz => match &self.strichartz {
                None => missing(&mut out),
                Some(s) => {
                    if s.n_list.len() < 3 || !increasing(&s.n_list) || s.n_list[0] < 1 {
                        out.push("strichartz.n_list needs at least 3 positive strictly increasing values".into());
                    }
                    let admissible = strichartz_admissible_p(d);
                    if let Some(p) = s.p {
                        if (p - admissible).abs() > 1e-12 {
                            out.push(format!("strichartz.p = {p} is not the admissible exponent {admissible} for d = {d}"));
                        }
                    }
                }
            },
            Experiment::Tails => match &self.tails {
                None => missing(&mut out),
                Some(s) => {
                    if let Err(e) = TorusEnsembleSpec::new(d, s.alpha, s.cutoff_k, self.master_seed) {
                        out.push(format!("tails: {e}"));
                    }
                    if s.samples < MIN_TAIL_SAMPLES {
                        out.push(format!("tails.samples must be at least {MIN_TAIL_SAMPLES}, got {}", s.samples));
                    }
                    if !(s.p >= 1.0 && s.p.is_finite()) {
                        out.push(format!("tails.p must be finite and at least 1, got {}", s.p));
                    }
                    if !s.t.is_finite() {
                        out.push("tails.t must be finite".into());
                    }
                    if s.n_list.is_empty() || !increasing(&s.n_list) || s.n_list[0] < 1 {
                        out.push("tails.n_list must be non-empty, positive and strictly increasing".into());
                    }
                    if let Some(n) = s.n_list.iter().find(|&&n| n as usize > s.cutoff_k) {
                        out.push(format!("tails: N = {n} exceeds cutoff_k = {}", s.cutoff_k));
                    }
                }
            },
            Experiment::Smoothing => match &self.smoothing {
                None => missing(&mut out),
                Some(s) => {
                    s.datum.check(d, &mut out, "smoothing.datum");
                    if let DatumSpec::Random { alpha, cutoff_k, .. } = s.datum {
                        if let Err(e) = TorusEnsembleSpec::new(d, alpha, cutoff_k, self.master_seed) {
                            out.push(format!("smoothing: {e}"));
                        }
                        if s.ensemble < 1 {
                            out.push("smoothing.ensemble must be at least 1".into());
                        }
                    }
                    if !(s.t_probe > 0.0 && s.t_probe.is_finite()) {
                        out.push(format!("smoothing.t_probe must be positive, got {}", s.t_probe));
                    }
                    s.flow.check(d, s.truncation_n.max(1), &mut out, "smoothing.flow");
                    if s.truncation_n < 1 {
                        out.push("smoothing.truncation_n must be at least 1".into());
                    }
                }
            },
            Experiment::ResonanceCount => match &self.resonance_count {
                None => missing(&mut out),
                Some(s) => {
                    if s.mu_list.is_empty() || s.n1_list.is_empty() {
                        out.push("resonance_count needs non-empty mu_list and n1_list".into());
                    }
                    if s.other_shells.len() > s.arity() - 1 {
                        out.push(format!("resonance_count.other_shells has more than {} entries", s.arity() - 1));
                    }
                    if s.count == CountKind::Quintic && d != 1 {
                        out.push("resonance_count: the quintic count is defined in dim = 1 only".into());
                    } else {
                        for &n1 in &s.n1_list {
                            if let Err(e) = s.query(d, 0, n1).validate(s.arity()) {
                                out.push(format!("resonance_count: {e}"));
                            }
                        }
                    }
                }
            },
            Experiment::LeeCheck => match &self.lee_check {
                None => missing(&mut out),
                Some(s) => {
                    if s.cases < 1 || s.p_list.is_empty() {
                        out.push("lee_check needs at least one case and one p".into());
                    }
                    if let Some(p) = s.p_list.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
                        out.push(format!("lee_check: p must be finite and at least 1, got {p}"));
                    }
                    if s.max_degree < 1 || s.samples <= 2 * s.max_degree {
                        out.push("lee_check: need max_degree ≥ 1 and samples > 2·max_degree".into());
                    }
                    if let Some(a) = s.alpha {
                        if !(a > 0.0 && a.is_finite()) {
                            out.push(format!("lee_check.alpha must be positive, got {a}"));
                        }
                    }
                }
            },
        }
        out
    }
}

fn check_points(points: Option<usize>, dim: usize, cutoff_k: usize, out: &mut Vec<String>, at: &str) {
    let (Some(m), Ok(fb)) = (points, FrequencyBox::new(dim, cutoff_k.max(1))) else { return };
    if m < fb.min_grid_points() {
        out.push(format!("{at}: points_per_axis = {m} is below the alias-free minimum {}", fb.min_grid_points()));
    }
}

pub fn section_name(e: Experiment) -> &'static str {
    match e {
        Experiment::LinearConvergence => "linear_convergence",
        Experiment::TruncationDiag => "truncation_diag",
        Experiment::Counterexample => "counterexample",
        Experiment::Strichartz => "strichartz",
        Experiment::Tails => "tails",
        Experiment::Smoothing => "smoothing",
        Experiment::ResonanceCount => "resonance_count",
        Experiment::LeeCheck => "lee_check",
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use displab::experiments::{
    counterexample_scaling, lee_inequality_check, lee_optimal_alpha, linear_convergence_diag,
    nonlinear_truncation_diag, rate_fit, smoothing_estimate, strichartz_admissible_p, strichartz_scaling, tail_scaling,
    CounterexampleGrid, RateFit, SmoothingData, StrichartzCorpus, TimeGrid,
};
use displab::random::{GaussianStream, TorusEnsembleSpec};
use displab::resonance::{bound_fit, count_quintic_r, count_s, max_count_r, max_count_s, CountReport};
use displab::spectral::FrequencyBox;
use displab::{Complex64, Error};

use crate::config::{CountKind, DatumSpec, Experiment, ExperimentConfig};

pub const CODE_VERSION: &str = concat!("displab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug)]
pub enum RunError {
    Validation(Vec<String>),
    /// A module error, tagged with the stage it came from.
    Module { stage: String, error: Error },
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Module { error, .. } => match error {
                Error::Precondition(_) | Error::Structure(_) => 2,
                Error::BlowUp { .. } => 3,
                Error::Resource(_) => 4,
                _ => 1,
            },
            RunError::Io(_) => 1,
        }
    }

    pub fn status(&self) -> &'static str {
        match self.exit_code() {
            2 => "validation_error",
            3 => "blow_up",
            4 => "resource_guard",
            _ => "error",
        }
    }

    pub fn summary(&self) -> Value {
        let detail = match self {
            RunError::Validation(v) => json!({ "violations": v }),
            RunError::Module { stage, error } => json!({ "stage": stage, "message": error.to_string() }),
            RunError::Io(e) => json!({ "message": e.to_string() }),
        };
        json!({ "status": self.status(), "exit_code": self.exit_code(), "error": detail })
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(v) => write!(f, "invalid config: {}", v.join("; ")),
            RunError::Module { stage, error } => write!(f, "{stage}: {error}"),
            RunError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn stage<T>(name: &str, r: displab::Result<T>) -> Result<T, RunError> {
    r.map_err(|error| RunError::Module { stage: name.to_string(), error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub key: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedDerivation {
    pub stage: String,
    pub seed: u64,
    pub derivation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub started: String,
    pub finished: String,
    pub stages: Vec<StageTiming>,
    pub seeds: Vec<SeedDerivation>,
    pub overrides: Vec<Override>,
    /// data files; the manifest itself is `manifest_path`
    pub files: Vec<OutputFile>,
    pub manifest_path: PathBuf,
    pub summary: Value,
}

impl RunManifest {
    pub fn csv_path(&self) -> &Path {
        &self.files[0].path
    }
}

/// CSV body: header, one row per point, then `#` comment lines with fit summaries.
#[derive(Debug, Default)]
struct Table {
    header: String,
    rows: Vec<String>,
    notes: Vec<String>,
}

impl Table {
    fn new(header: &str) -> Self {
        Self { header: header.to_string(), ..Self::default() }
    }

    fn note_fit(&mut self, label: &str, fit: &RateFit) {
        self.notes.push(format!("fit {label}: exponent={} log_constant={} r_squared={}", fit.exponent, fit.log_constant, fit.r_squared));
    }

    fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}", self.header).unwrap();
        for r in &self.rows {
            writeln!(s, "{r}").unwrap();
        }
        for n in &self.notes {
            writeln!(s, "# {n}").unwrap();
        }
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn fit_json(fit: &RateFit) -> Value {
    json!({ "exponent": fit.exponent, "log_constant": fit.log_constant, "r_squared": fit.r_squared })
}

struct Outcome {
    table: Table,
    summary: Value,
    seeds: Vec<SeedDerivation>,
}

fn ensemble_seed(stage: &str, seed: u64) -> SeedDerivation {
    SeedDerivation {
        stage: stage.into(),
        seed,
        derivation: "master_seed keys ChaCha8; trial t reads stream t, coefficient j reads word 4j".into(),
    }
}

fn datum_seeds(stage: &str, datum: &DatumSpec, seed: u64) -> Vec<SeedDerivation> {
    match datum {
        DatumSpec::Random { trial, .. } => vec![SeedDerivation {
            stage: stage.into(),
            seed,
            derivation: format!("master_seed keys ChaCha8; the datum is trial {trial}"),
        }],
        _ => Vec::new(),
    }
}

fn diag_points(points: Option<usize>, dim: usize, cutoff_k: usize) -> displab::Result<usize> {
    Ok(match points {
        Some(m) => m,
        None => FrequencyBox::new(dim, cutoff_k)?.min_grid_points(),
    })
}

fn compute(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let (d, seed) = (cfg.dim, cfg.master_seed);
    match cfg.experiment {
        Experiment::LinearConvergence => {
            let s = cfg.linear_convergence.as_ref().expect("validated");
            let f = stage("datum", s.datum.build(d, seed))?;
            let m = stage("grid", diag_points(s.points_per_axis, d, s.datum.cutoff_k()))?;
            let points = stage("linear_convergence", linear_convergence_diag(&f, &s.deltas, s.samples, m))?;
            let mut table = Table::new("delta,sup_norm");
            table.rows = points.iter().map(|(a, b)| format!("{a},{b}")).collect();
            let mut ascending = points.clone();
            ascending.reverse();
            let fit = (points.len() >= 2 && points.iter().all(|p| p.1 > 0.0)).then(|| rate_fit(&ascending)).transpose();
            let fit = stage("fit", fit)?;
            if let Some(fit) = &fit {
                table.note_fit("sup_norm ~ delta^e", fit);
            }
            let summary = json!({ "points": points.len(), "fit": fit.as_ref().map(fit_json) });
            Ok(Outcome { table, summary, seeds: datum_seeds("datum", &s.datum, seed) })
        }
        Experiment::TruncationDiag => {
            let s = cfg.truncation_diag.as_ref().expect("validated");
            let f = stage("datum", s.datum.build(d, seed))?;
            let template = stage("flow", s.flow.config(s.n_ref))?;
            let grid = stage("grid", TimeGrid::new(s.delta, s.samples))?;
            let m = stage("grid", diag_points(s.points_per_axis, d, s.datum.cutoff_k()))?;
            let points = stage("truncation_diag", nonlinear_truncation_diag(&f, &template, &s.n_list, s.n_ref, &grid, m))?;
            let decreasing = points.windows(2).all(|w| w[1].1 < w[0].1);
            let mut table = Table::new("N,sup_norm");
            table.rows = points.iter().map(|(n, v)| format!("{n},{v}")).collect();
            table.notes.push(format!("N_ref={} strictly_decreasing={decreasing}", s.n_ref));
            let summary = json!({ "n_ref": s.n_ref, "norms": points, "strictly_decreasing": decreasing });
            Ok(Outcome { table, summary, seeds: datum_seeds("datum", &s.datum, seed) })
        }
        Experiment::Counterexample => {
            let s = cfg.counterexample.as_ref().expect("validated");
            let grid = CounterexampleGrid { points_per_n: s.points_per_n, subdivisions: s.subdivisions };
            let report = stage("counterexample", counterexample_scaling(&s.n_list, s.kappa, &grid))?;
            let mut table = Table::new("N,D,modes,lattice_ratio,fine_ratio,lattice_times,fine_times");
            table.rows = report
                .points
                .iter()
                .map(|p| {
                    let r = &p.ratio;
                    format!("{},{},{},{},{},{},{}", p.n, p.spacing, p.modes, r.lattice, r.fine, r.lattice_times, r.fine_times)
                })
                .collect();
            table.note_fit("lattice_ratio ~ N^e", &report.fit);
            table.note_fit("fine_ratio ~ N^e", &report.fine_fit);
            let summary = json!({
                "kappa": s.kappa,
                "rows": report.points.len(),
                "fit": fit_json(&report.fit),
                "fine_fit": fit_json(&report.fine_fit),
            });
            Ok(Outcome { table, summary, seeds: Vec::new() })
        }
        Experiment::Strichartz => {
            let s = cfg.strichartz.as_ref().expect("validated");
            let p = s.p.unwrap_or(strichartz_admissible_p(d));
            let corpus = StrichartzCorpus { random: s.random, master_seed: seed };
            let report = stage("strichartz", strichartz_scaling(d, &s.n_list, p, &corpus))?;
            let mut table = Table::new("N,worst_ratio");
            table.rows = report.points.iter().map(|(n, v)| format!("{n},{v}")).collect();
            table.note_fit("worst_ratio ~ N^e", &report.fit);
            table.notes.push(format!("predicted_exponent={}", report.predicted_exponent));
            let summary = json!({ "p": p, "fit": fit_json(&report.fit), "predicted_exponent": report.predicted_exponent });
            Ok(Outcome { table, summary, seeds: vec![ensemble_seed("strichartz corpus", seed)] })
        }
        Experiment::Tails => {
            let s = cfg.tails.as_ref().expect("validated");
            let spec = stage("ensemble", TorusEnsembleSpec::new(d, s.alpha, s.cutoff_k, seed))?;
            let points = stage("tails", tail_scaling(&spec, &s.n_list, s.p, s.t, s.samples))?;
            let mut table = Table::new("N,rate,intercept,r_squared");
            table.rows = points.iter().map(|p| format!("{},{},{},{}", p.n, p.fit.rate, p.fit.intercept, p.fit.r_squared)).collect();
            let doublings: Vec<Value> = points
                .windows(2)
                .map(|w| json!({ "from": w[0].n, "to": w[1].n, "ratio": w[1].fit.rate / w[0].fit.rate }))
                .collect();
            for w in points.windows(2) {
                table.notes.push(format!("rate_ratio {}->{}: {}", w[0].n, w[1].n, w[1].fit.rate / w[0].fit.rate));
            }
            let summary = json!({ "rates": points.iter().map(|p| (p.n, p.fit.rate)).collect::<Vec<_>>(), "ratios": doublings });
            Ok(Outcome { table, summary, seeds: vec![ensemble_seed("tails ensemble", seed)] })
        }
        Experiment::Smoothing => {
            let s = cfg.smoothing.as_ref().expect("validated");
            let config = stage("flow", s.flow.config(s.truncation_n))?;
            let (data, seeds) = match s.datum {
                DatumSpec::Random { alpha, cutoff_k, .. } => (
                    SmoothingData::Ensemble(stage("ensemble", TorusEnsembleSpec::new(d, alpha, cutoff_k, seed))?),
                    vec![ensemble_seed("smoothing ensemble", seed)],
                ),
                ref other => (
                    SmoothingData::Deterministic { field: stage("datum", other.build(d, seed))?, regularity: other.regularity() },
                    Vec::new(),
                ),
            };
            let r = stage("smoothing", smoothing_estimate(&data, &config, s.t_probe, s.ensemble))?;
            let mut table = Table::new(
                "data_regularity,slope_data,slope_duhamel,sigma_eff,r_squared_data,r_squared_duhamel,ensemble,usable,failed,reliable",
            );
            table.rows.push(format!(
                "{},{},{},{},{},{},{},{},{},{}",
                r.data_regularity,
                opt(r.shell_slope_data),
                opt(r.shell_slope_duhamel),
                opt(r.sigma_eff),
                opt(r.r_squared_data),
                opt(r.r_squared_duhamel),
                r.ensemble_size,
                r.usable_trials,
                r.failed_trials,
                r.reliable
            ));
            table.notes.push(format!("shells={:?}", r.shells));
            let summary = json!({ "sigma_eff": r.sigma_eff, "reliable": r.reliable, "usable_trials": r.usable_trials, "failed_trials": r.failed_trials });
            Ok(Outcome { table, summary, seeds })
        }
        Experiment::ResonanceCount => {
            let s = cfg.resonance_count.as_ref().expect("validated");
            let mut table = Table::new(CountReport::CSV_HEADER);
            let mut fits = Vec::new();
            for &mu in &s.mu_list {
                let mut reports = Vec::new();
                for &n1 in &s.n1_list {
                    let q = s.query(d, mu, n1);
                    let label = format!("resonance mu={mu} N1={n1}");
                    let report = stage(&label, match s.count {
                        CountKind::MaxR => max_count_r(&q),
                        CountKind::MaxSN3 => max_count_s(&q, 3),
                        CountKind::S => count_s(&q),
                        CountKind::Quintic => count_quintic_r(&q, s.target_n),
                    })?;
                    table.rows.push(report.csv_row());
                    reports.push(report);
                }
                let bound = reports[0].bound_reference;
                match bound_fit(&reports, bound) {
                    Ok(fit) => {
                        table.note_fit(&format!("mu={mu} count ~ N1^e"), &fit);
                        fits.push(json!({ "mu": mu, "fit": fit_json(&fit) }));
                    }
                    Err(e) => {
                        table.notes.push(format!("fit mu={mu}: undefined ({e})"));
                        fits.push(json!({ "mu": mu, "fit": Value::Null, "reason": e.to_string() }));
                    }
                }
            }
            Ok(Outcome { table, summary: json!({ "fits": fits }), seeds: Vec::new() })
        }
        Experiment::LeeCheck => {
            let s = cfg.lee_check.as_ref().expect("validated");
            let mut table = Table::new("case,degree,p,alpha,lhs,rhs,holds");
            let mut holds = 0usize;
            for case in 0..s.cases as u64 {
                let mut g = GaussianStream::new(seed, case);
                let degree = 1 + (case as usize % s.max_degree) as i64;
                let coeffs: Vec<Complex64> = (-degree..=degree).map(|_| g.next_gaussian()).collect();
                let phi: Vec<Complex64> = (0..s.samples)
                    .map(|j| {
                        let t = j as f64 / s.samples as f64;
                        coeffs
                            .iter()
                            .zip(-degree..)
                            .map(|(c, k)| c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 * t))
                            .sum()
                    })
                    .collect();
                let p = s.p_list[case as usize % s.p_list.len()];
                let alpha = match s.alpha {
                    Some(a) => a,
                    None => stage("lee alpha", lee_optimal_alpha(&phi, p))?,
                };
                let c = stage("lee_check", lee_inequality_check(&phi, p, alpha))?;
                holds += c.holds as usize;
                table.rows.push(format!("{case},{degree},{p},{alpha},{},{},{}", c.lhs, c.rhs, c.holds));
            }
            table.notes.push(format!("holds={holds}/{}", s.cases));
            let summary = json!({ "cases": s.cases, "holds": holds });
            Ok(Outcome { table, summary, seeds: vec![ensemble_seed("lee polynomials", seed)] })
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Applies `--seed` and `--out` style overrides, logging each change.
pub fn apply_overrides(cfg: &mut ExperimentConfig, seed: Option<u64>, out: Option<PathBuf>) -> Vec<Override> {
    let mut log = Vec::new();
    if let Some(s) = seed {
        log.push(Override { key: "master_seed".into(), from: cfg.master_seed.to_string(), to: s.to_string() });
        cfg.master_seed = s;
    }
    if let Some(dir) = out {
        log.push(Override {
            key: "output_dir".into(),
            from: cfg.output_dir.display().to_string(),
            to: dir.display().to_string(),
        });
        cfg.output_dir = dir;
    }
    log
}

/// Validates, runs the experiment, writes `{experiment}_{d}d_{timestamp}.{csv,json}`.
pub fn run(cfg: &ExperimentConfig, overrides: Vec<Override>) -> Result<RunManifest, RunError> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(RunError::Validation(violations));
    }
    let started = chrono::Utc::now();
    let t0 = Instant::now();
    fs::create_dir_all(&cfg.output_dir)?;
    let setup = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let outcome = compute(cfg)?;
    let compute_secs = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let stem = format!("{}_{}d_{}", cfg.experiment.name(), cfg.dim, started.format("%Y%m%dT%H%M%S%.6fZ"));
    let csv_path = cfg.output_dir.join(format!("{stem}.csv"));
    let csv = outcome.table.render();
    fs::write(&csv_path, &csv)?;
    let files = vec![OutputFile { path: csv_path, sha256: sha256_hex(csv.as_bytes()), bytes: csv.len() as u64 }];
    let mut manifest = RunManifest {
        config: cfg.clone(),
        code_version: CODE_VERSION.to_string(),
        started: started.to_rfc3339(),
        finished: String::new(),
        stages: vec![
            StageTiming { stage: "setup".into(), seconds: setup },
            StageTiming { stage: cfg.experiment.name().into(), seconds: compute_secs },
        ],
        seeds: outcome.seeds,
        overrides,
        files,
        manifest_path: cfg.output_dir.join(format!("{stem}.json")),
        summary: outcome.summary,
    };
    manifest.stages.push(StageTiming { stage: "write".into(), seconds: t2.elapsed().as_secs_f64() });
    manifest.finished = chrono::Utc::now().to_rfc3339();
    fs::write(&manifest.manifest_path, serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?)?;
    Ok(manifest)
}

/// One-line JSON summary of a finished run.
pub fn success_summary(m: &RunManifest) -> Value {
    json!({
        "status": "ok",
        "exit_code": 0,
        "experiment": m.config.experiment.name(),
        "csv": m.csv_path(),
        "csv_sha256": m.files[0].sha256,
        "manifest": m.manifest_path,
        "result": m.summary,
    })
}

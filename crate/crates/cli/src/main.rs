use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use displab_cli::{apply_overrides, run, success_summary, Experiment, ExperimentConfig, RunError};

/// Runs one displab experiment from a TOML config.
#[derive(Debug, Parser)]
#[command(name = "displab", version)]
struct Args {
    /// linear-convergence, truncation-diag, counterexample, strichartz, tails,
    /// smoothing, resonance-count or lee-check
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// worker threads for trial-parallel stages
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn fail(err: RunError) -> ExitCode {
    eprintln!("displab: {err}");
    println!("{}", err.summary());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let Some(experiment) = Experiment::parse(&args.experiment) else {
        let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
        return fail(RunError::Validation(vec![format!(
            "unknown experiment '{}', expected one of {}",
            args.experiment,
            names.join(", ")
        )]));
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(RunError::Validation(vec![format!("cannot read {}: {e}", args.config.display())])),
    };
    let mut cfg = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => return fail(RunError::Validation(vec![format!("config parse error: {e}")])),
    };
    if cfg.experiment != experiment {
        return fail(RunError::Validation(vec![format!(
            "command line asks for {} but the config describes {}",
            experiment.name(),
            cfg.experiment.name()
        )]));
    }
    let overrides = apply_overrides(&mut cfg, args.seed, args.out);
    let jobs = args.jobs.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => return fail(RunError::Validation(vec![format!("cannot start {jobs} workers: {e}")])),
    };
    match pool.install(|| run(&cfg, overrides)) {
        Ok(m) => {
            let mut summary = success_summary(&m);
            summary["jobs"] = json!(pool.current_num_threads());
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

//! Configuration-driven runner for the displab experiments.
//!
//! A run reads one TOML file, checks every parameter against the target
//! experiment's preconditions, computes, and writes a CSV plus a JSON
//! manifest into `output_dir`.

pub mod config;
pub mod run;

pub use config::{DatumSpec, Experiment, ExperimentConfig, FlowSection};
pub use run::{apply_overrides, run, success_summary, Override, RunError, RunManifest};

use std::path::Path;
use std::process::Command;

use displab_cli::{run, ExperimentConfig, RunError};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

const SMOOTHING: &str = r#"
experiment = "smoothing"
[smoothing]
truncation_n = 64
t_probe = 0.01
[smoothing.datum]
kind = "power"
regularity = 0.25
cutoff_k = 64
"#;

#[test]
fn well_formed_config_has_no_violations() {
    assert!(config(SMOOTHING).validate().is_empty());
    for name in std::fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs")).unwrap() {
        let path = name.unwrap().path();
        let cfg = config(&std::fs::read_to_string(&path).unwrap());
        assert_eq!(cfg.validate(), Vec::<String>::new(), "{}", path.display());
    }
}

#[test]
fn dt_rule_violation() {
    let text = format!("{SMOOTHING}[smoothing.flow]\ndt = 0.001\n");
    let v = config(&text).validate();
    assert_eq!(v.len(), 1, "{v:?}");
    assert!(v[0].contains("dt ≤ 0.5·N⁻²"), "{v:?}");
}

#[test]
fn quintic_in_two_dimensions() {
    let text = format!("dim = 2\n{SMOOTHING}[smoothing.flow]\nnonlinearity = \"wick_quintic\"\n");
    let v = config(&text).validate();
    assert_eq!(v.len(), 1, "{v:?}");
    assert!(v[0].contains("quintic"));
}

#[test]
fn invalid_kappa_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let mut cfg = config("experiment = \"counterexample\"\n[counterexample]\nkappa = 0.7\nn_list = [256, 512, 1024, 2048]\n");
    cfg.output_dir = out.clone();
    let err = run(&cfg, Vec::new()).unwrap_err();
    assert!(matches!(&err, RunError::Validation(v) if v.len() == 1 && v[0].contains("kappa")), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn missing_section_and_unknown_keys() {
    assert_eq!(config("experiment = \"tails\"").validate().len(), 1);
    assert!(ExperimentConfig::from_toml("experiment = \"tails\"\nbogus = 1\n").is_err());
    assert!(ExperimentConfig::from_toml("experiment = \"nope\"").is_err());
}

#[test]
fn counterexample_run_writes_rows_fit_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/counterexample.toml")).unwrap());
    cfg.output_dir = dir.path().to_path_buf();
    let m = run(&cfg, Vec::new()).unwrap();
    let csv = std::fs::read_to_string(m.csv_path()).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(csv.lines().any(|l| l.starts_with("# fit lattice_ratio")));
    assert_eq!(m.files[0].sha256, hex::encode(Sha256::digest(csv.as_bytes())));
    let name = m.csv_path().file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("counterexample_1d_") && name.ends_with(".csv"));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(&m.manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["files"][0]["sha256"], Value::String(m.files[0].sha256.clone()));
    assert_eq!(manifest["config"]["counterexample"]["kappa"], 0.4);
}

fn displab(args: &[&str], cwd: &Path) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_displab")).args(args).current_dir(cwd).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "{stdout}");
    (out.status.code().unwrap(), serde_json::from_str(&stdout).unwrap())
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        std::fs::write(dir.path().join(name), text).unwrap();
    };
    write("bad.toml", "experiment = \"counterexample\"\n[counterexample]\nkappa = 0.7\nn_list = [256, 512, 1024, 2048]\n");
    write(
        "blow.toml",
        "experiment = \"smoothing\"\n[smoothing]\ntruncation_n = 16\nt_probe = 0.5\n[smoothing.datum]\nkind = \"power\"\nregularity = -2.0\ncutoff_k = 16\n[smoothing.flow]\nnonlinearity = \"wick_quintic\"\nsign = \"focusing\"\nscheme = \"integrating_factor_rk4\"\n",
    );
    write(
        "guard.toml",
        "experiment = \"resonance-count\"\ndim = 2\n[resonance_count]\ncount = \"max_s_n3\"\nmu_list = [2]\nn1_list = [1024]\n",
    );
    write("ok.toml", SMOOTHING);
    let (code, v) = displab(&["counterexample", "--config", "bad.toml"], dir.path());
    assert_eq!((code, v["status"].as_str().unwrap()), (2, "validation_error"));
    let (code, _) = displab(&["tails", "--config", "ok.toml"], dir.path());
    assert_eq!(code, 2);
    let (code, _) = displab(&["no-such", "--config", "ok.toml"], dir.path());
    assert_eq!(code, 2);
    let (code, v) = displab(&["smoothing", "--config", "blow.toml"], dir.path());
    assert_eq!((code, v["status"].as_str().unwrap()), (3, "blow_up"));
    let (code, v) = displab(&["resonance-count", "--config", "guard.toml"], dir.path());
    assert_eq!((code, v["status"].as_str().unwrap()), (4, "resource_guard"));
    let (code, v) = displab(&["smoothing", "--config", "ok.toml", "--out", "res", "--seed", "9", "--jobs", "1"], dir.path());
    assert_eq!(code, 0, "{v}");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(v["manifest"].as_str().unwrap())).unwrap()).unwrap();
    let keys: Vec<&str> = manifest["overrides"].as_array().unwrap().iter().map(|o| o["key"].as_str().unwrap()).collect();
    assert_eq!(keys, ["master_seed", "output_dir"]);
    assert_eq!(manifest["config"]["master_seed"], 9);
    assert!(dir.path().join("res").is_dir());
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn translab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_translab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("TRANSLAB_OUT")
        .output()
        .expect("spawn translab")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stderr_error_kind(o: &Output) -> String {
    let v: Value = serde_json::from_slice(&o.stderr).expect("stderr is JSON");
    v["error"]["kind"].as_str().expect("error.kind").to_string()
}

#[test]
fn kernel_eval_k0_prints_17_digits() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["kernel", "eval", "--fn", "k0", "--x", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.trim().starts_with("0.421024438240708"), "{s}");
    let v: f64 = s.trim().parse().unwrap();
    assert!((v - 0.421_024_438_240_708_3).abs() < 1e-15);
}

#[test]
fn downward_limit_experiment_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["experiment", "downward-limit", "--c-minus", "0", "--c-plus", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let lim = v["metrics"]["limit"].as_f64().unwrap();
    assert!((lim - 0.5).abs() < 1e-2, "{lim}");
    assert!(dir.path().join("downward-limit.json").exists());
}

#[test]
fn solve_plane_has_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["solve", "--data", r#"{"kind":"plane","a":0.5,"b":-1.25}"#]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["residual"].as_f64(), Some(0.0));
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn config_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["experiment", "no-such-experiment"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&o), "config");

    let o = translab(dir.path(), &["experiment", "duffin-mass", "--bogus-key", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&o), "config");

    let o = translab(dir.path(), &["kernel", "eval", "--fn", "k0", "--x", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&o), "domain");
}

#[test]
fn failed_verdict_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // A tolerance nothing can meet.
    let o = translab(dir.path(), &["experiment", "duffin-mass", "--mass-tol", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_verifies_against_its_own_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["experiment", "relaxation", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let report = dir.path().join("relaxation.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["parameters"]["seed"], 11);

    let o = translab(dir.path(), &["verify", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = stdout_json(&o);
    assert_eq!(rows["verified"][0]["reproduced"], true);

    // Tampering with a metric breaks reproduction.
    let text = std::fs::read_to_string(&report).unwrap().replace("\"probes\": 500", "\"probes\": 501");
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, text).unwrap();
    let o = translab(dir.path(), &["verify", tampered.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn global_seed_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["--seed", "3", "experiment", "limit-configuration"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["parameters"]["seed"], 3);
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"step_depth": 100.0, "step_tol": 0.1}"#).unwrap();
    let o =
        translab(dir.path(), &["experiment", "duffin-mass", "--config", cfg.to_str().unwrap(), "--step-depth", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["parameters"]["config"]["step_depth"], 1000.0);
    assert_eq!(v["parameters"]["config"]["step_tol"], 0.1);
}

#[test]
fn probes_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(
        dir.path(),
        &["duffin", "--trace", r#"{"pieces":[{"segment":{"type":"Constant","c":2.0}}]}"#, "--x2", "0.3", "--x3", "-5"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: f64 = String::from_utf8(o.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 2.0).abs() < 1e-9, "{v}");
    let o = translab(
        dir.path(),
        &["heat", "--trace", r#"{"pieces":[{"segment":{"type":"Constant","c":2.0}}]}"#, "--x", "1", "--t", "4"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: f64 = String::from_utf8(o.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 2.0).abs() < 1e-9, "{v}");
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let o = translab(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use superint::cli::{main_with_args, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};

fn run(args: &[&str], out: &Path) -> i32 {
    let mut full = vec!["superint"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", out.to_str().unwrap()]);
    main_with_args(full)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn suite_names(r: &Value) -> Vec<String> {
    r["suites"].as_array().unwrap().iter().map(|s| s["suite"].as_str().unwrap().to_string()).collect()
}

#[test]
fn verify_minimal_preset_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "--preset", "v1", "--samples", "30"], dir.path()), EXIT_PASS);
    let r = report(dir.path());
    assert_eq!(suite_names(&r), ["conservation", "involution", "independence"]);
    assert_eq!(r["config"]["samples"], 30);
    assert!(r["version"].is_string());
}

#[test]
fn verify_calogero_reports_the_rank_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "--preset", "calogero", "--samples", "20"], dir.path()), EXIT_FAIL);
    let r = report(dir.path());
    assert_eq!(suite_names(&r), ["conservation", "involution", "independence", "linear-connection"]);
    let failing: Vec<&Value> = r["suites"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["cases"].as_array().unwrap())
        .filter(|c| c["pass"] == false)
        .collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0]["label"], "modal rank = 5");
    assert_eq!(failing[0]["metrics"]["modal"], 4.0);
}

#[test]
fn audit_lists_discrepancies_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["audit", "--preset", "calogero"], dir.path()), EXIT_PASS);
    let r = report(dir.path());
    let d = r["discrepancies"].as_array().unwrap();
    assert!(!d.is_empty());
    assert!(d.iter().any(|e| e["equation"] == "calogero-profile"));
}

#[test]
fn charts_pass() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["charts", "--preset", "calogero", "--samples", "50"], dir.path()), EXIT_PASS);
}

#[test]
fn simulate_from_config_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("free.json");
    fs::write(
        &cfg,
        r#"{
  "command": "simulate",
  "system": {"family": "spherical-separable"},
  "simulation": {"integrator": "yoshida-4", "dt": 0.01, "t_final": 1.0, "initial_state": [0, 0, 0, 1, 0, 0]}
}"#,
    )
    .unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], dir.path()), EXIT_PASS);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,q1,q2,q3,p1,p2,p3");
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-12 && (last[1] - 1.0).abs() < 1e-12);
    assert!(last[2].abs() < 1e-12 && last[3].abs() < 1e-12);
    let r = report(dir.path());
    assert_eq!(r["simulation"]["drift"]["trajectory"]["status"], "completed");
}

#[test]
fn simulate_drift_tolerance_and_closure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("planes.json");
    fs::write(
        &cfg,
        r#"{
  "command": "simulate",
  "system": {"family": "spherical-separable", "parameters": {"c1": 0.1, "c2": 0.2, "c3": 0.3}, "radial": {"terms": [{"coefficient": 1.0, "power": 2}]}},
  "simulation": {"t_final": 12.0, "closure": true, "drift_tolerance": 1e-6}
}"#,
    )
    .unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], dir.path()), EXIT_PASS);
    let r = report(dir.path());
    assert_eq!(suite_names(&r), ["drift"]);
    assert!(r["simulation"]["closure"]["outcome"]["status"].is_string());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"command": "verify", "system": {"family": "rotational-family"}, "typo": 1}"#).unwrap();
    assert_eq!(run(&["--config", bad.to_str().unwrap()], dir.path()), EXIT_ERROR);
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"command": "verify", "system": {"family": "nonexistent"}}"#).unwrap();
    assert_eq!(run(&["--config", unknown.to_str().unwrap()], dir.path()), EXIT_ERROR);
    assert_eq!(run(&["--config", "/no/such/file.json"], dir.path()), EXIT_ERROR);
    assert_eq!(run(&["verify", "--preset", "nope"], dir.path()), EXIT_ERROR);
    assert_eq!(run(&["verify"], dir.path()), EXIT_ERROR);
    assert_eq!(run(&["verify", "--preset", "v1", "--seed", "xyz"], dir.path()), EXIT_ERROR);
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn binary_runs_a_preset() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_superint"))
        .args(["verify", "--preset", "layered-oscillator", "--samples", "20", "--out"])
        .arg(dir.path())
        .env("SUPERINT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_PASS), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(String::from_utf8_lossy(&status.stdout).contains("[conservation]"));
    assert!(dir.path().join("report.json").exists());
}

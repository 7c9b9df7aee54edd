use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn magswim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magswim"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn params_prints_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = magswim(dir.path(), &["params"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["L"], 0.007);
    assert_eq!(v["N"], 2);
    assert_eq!(v["m"], 1.68e-4);
}

#[test]
fn bracket_of_drift_and_control_vanishes_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let out = magswim(dir.path(), &["bracket", "--word", "[0,1]"]);
    assert!(out.status.success());
    let v: Vec<f64> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.len(), 5);
    assert!(v.iter().all(|x| *x == 0.0));
}

#[test]
fn malformed_bracket_word_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = magswim(dir.path(), &["bracket", "--word", "[0,"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let out = magswim(dir.path(), &["--config", cfg.to_str().unwrap(), "params"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn config_overrides_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"params": {"N": 4}}"#).unwrap();
    let out = magswim(dir.path(), &["--config", cfg.to_str().unwrap(), "params"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["N"], 4);
    assert_eq!(v["L"], 0.007);
}

#[test]
fn verify_writes_report_and_flags_only_the_alpha_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = magswim(dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(3));
    let report = read_json(&dir.path().join("report.json"));
    assert!(report["config"].is_object());
    let failing: Vec<&str> = report["result"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["alpha_matches_closed_form"]);
}

#[test]
fn simulate_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = magswim(dir.path(), &["simulate", "--control", "sinusoidal", "--T", "0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut rows = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next().unwrap(), "t,x,y,theta_z,phi_1,phi_2,u1,u2");
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[0] - 0.2).abs() < 1e-12);
    assert!(dir.path().join("trajectory.svg").exists());
}

#[test]
fn simulate_rejects_negative_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let out = magswim(dir.path(), &["simulate", "--T", "-1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn small_reach_run_writes_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = magswim(dir.path(), &["--seed", "7", "reach", "--n-mc", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("endpoints.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 7);
    let occ = read_json(&dir.path().join("occupancy.json"));
    assert_eq!(occ["seed"], 7);
    for f in ["endpoints.svg", "endpoints_zoom.svg"] {
        assert!(dir.path().join(f).exists());
    }
}

#[test]
fn reach_is_reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(magswim(a.path(), &["--threads", "1", "reach", "--n-mc", "4"]).status.success());
    assert!(magswim(b.path(), &["--threads", "2", "reach", "--n-mc", "4"]).status.success());
    let read = |d: &Path| std::fs::read_to_string(d.join("endpoints.csv")).unwrap();
    let strip = |s: String| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(read(a.path())), strip(read(b.path())));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn seqlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqlab"))
        .args(args)
        .env_remove("SEQLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SOLVE: &str = r#"{
  "experiment": "solve",
  "set": { "kind": "monotone_cone", "dim": 3 },
  "x": [3, 1, 2]
}"#;

const RISK: &str = r#"{
  "experiment": "risk",
  "set": { "kind": "box", "lo": [-1, -1, -1], "hi": [1, 1, 1] },
  "theta": [0.5, 0, -1],
  "reps": 500,
  "seed": 9
}"#;

const FAILING_CSTAR: &str = r#"{
  "experiment": "cstar",
  "constants": { "rho": 0.2, "beta": 0.42, "eta": 1e-20, "b": 51.53 }
}"#;

#[test]
fn solve_prints_isotonic_fit() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "solve.json", SOLVE);
    let out = seqlab(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    let text = report["results"].to_string();
    assert!(text.contains("2.0") || text.contains('2'), "{text}");
}

#[test]
fn cstar_without_config_passes() {
    let out = seqlab(&["cstar"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["experiment"], "cstar");
    assert_eq!(report["pass"], true);
}

#[test]
fn malformed_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{ "experiment": "risk", "reps": "many" }"#);
    let out = seqlab(&["risk", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("reps"), "{}", stderr(&out));
}

#[test]
fn unknown_field_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{ "experiment": "cstar", "rhoo": 1 }"#);
    let out = seqlab(&["cstar", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rhoo"), "{}", stderr(&out));
}

#[test]
fn missing_seed_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "risk.json", &RISK.replace("\"seed\": 9", "\"reps\": 500"));
    let out = seqlab(&["risk", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn experiment_mismatch_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "solve.json", SOLVE);
    let out = seqlab(&["risk", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("solve"), "{}", stderr(&out));
}

#[test]
fn infeasible_theta_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "risk.json", &RISK.replace("[0.5, 0, -1]", "[3, 0, 0]"));
    let out = seqlab(&["risk", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn failing_check_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cstar.json", FAILING_CSTAR);
    let out = seqlab(&["cstar", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sufficiency"), "{}", stderr(&out));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "risk.json", RISK);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = seqlab(&["risk", "--config", &cfg, "--output", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "risk.json", RISK);
    let one = Command::new(env!("CARGO_BIN_EXE_seqlab"))
        .args(["risk", "--config", &cfg])
        .env("SEQLAB_THREADS", "1")
        .output()
        .unwrap();
    let three = Command::new(env!("CARGO_BIN_EXE_seqlab"))
        .args(["risk", "--config", &cfg])
        .env("SEQLAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn bad_thread_count_exits_two() {
    let out = Command::new(env!("CARGO_BIN_EXE_seqlab"))
        .arg("cstar")
        .env("SEQLAB_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("SEQLAB_THREADS"), "{}", stderr(&out));
}

#[test]
fn csv_output_has_a_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "solve.json", SOLVE);
    let out = seqlab(&["solve", "--config", &cfg, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,value"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn empty_suite_exits_two() {
    let dir = TempDir::new().unwrap();
    let out = seqlab(&["suite", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn passing_suite_writes_relative_outputs() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "a_solve.json", &SOLVE.replace("\"x\"", "\"output\": \"out/solve.json\", \"x\""));
    write(dir.path(), "b_cstar.json", r#"{ "experiment": "cstar" }"#);
    let out = seqlab(&["suite", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("out/solve.json").exists());
}

#[test]
fn failing_suite_names_the_check() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "a_solve.json", SOLVE);
    write(dir.path(), "b_cstar.json", FAILING_CSTAR);
    let out = seqlab(&["suite", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], false);
    let failed = report["runs"][1]["failed_checks"].to_string();
    assert!(failed.contains("sufficiency"), "{failed}");
}

#[test]
fn suite_with_a_bad_file_runs_nothing() {
    let dir = TempDir::new().unwrap();
    let marker = dir.path().join("out.json");
    write(dir.path(), "a_solve.json", &SOLVE.replace("\"x\"", "\"output\": \"out.json\", \"x\""));
    write(dir.path(), "b_bad.json", "{ not json");
    let out = seqlab(&["suite", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("b_bad.json"), "{}", stderr(&out));
    assert!(!marker.exists());
}

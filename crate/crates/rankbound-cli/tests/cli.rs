//! End-to-end tests of the `rankbound` binary: exit codes, JSON shapes,
//! trace files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankbound"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn json_of(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is one JSON document")
}

const DENSITY2: &str = r#"{
    "set": {"kind": "density", "n": 2},
    "kappa": 1,
    "objective": {"kind": "matrix_distance",
                  "M": {"rows": 2, "cols": 2, "data": [0.8, 0.0, 0.0, 0.2]}},
    "constants": {"theta": 1.0, "M_grad": 0.0},
    "solver": {"rho0": "auto", "tau": 1.0, "max_stages": 40, "tol": 1e-8, "seed": 5}
}"#;

const CORRELATION2: &str = r#"{
    "set": {"kind": "correlation", "n": 2},
    "kappa": 1,
    "objective": {"kind": "matrix_distance",
                  "M": {"rows": 2, "cols": 2, "data": [1.0, 0.3, 0.3, 1.0]}},
    "constants": {"theta": 1.0, "M_grad": 0.0},
    "solver": {"seed": 1}
}"#;

#[test]
fn certify_reports_the_witness_bound() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", DENSITY2);
    let point = write(
        dir.path(),
        "x.json",
        r#"{"rows": 2, "cols": 2, "data": [0.5, 0.0, 0.0, 0.5]}"#,
    );
    let out = bin()
        .args(["certify", "--problem"])
        .arg(&problem)
        .arg("--point")
        .arg(&point)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json_of(&out);
    let dist_upper = v["witness"]["dist_upper"].as_f64().unwrap();
    assert!((dist_upper - 0.5f64.sqrt()).abs() <= 1e-9);
    assert_eq!(v["witness"]["input_in_omega"], serde_json::json!(true));
    assert_eq!(v["feasible_local"]["rigor"], "rigorous");
    assert!(v["solution_local"]["value"].as_f64().is_some());
}

#[test]
fn certify_on_feasible_point_gives_zero_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", DENSITY2);
    let point = write(
        dir.path(),
        "x.json",
        r#"{"rows": 2, "cols": 2, "data": [1.0, 0.0, 0.0, 0.0]}"#,
    );
    let out = bin()
        .args(["certify", "--problem"])
        .arg(&problem)
        .arg("--point")
        .arg(&point)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_of(&out);
    assert!(v["feasible_local"]["value"].as_f64().unwrap() <= 1e-9);
    assert!(v["feasible_global"]["value"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", "{ not json");
    let point = write(
        dir.path(),
        "x.json",
        r#"{"rows":2,"cols":2,"data":[1,0,0,0]}"#,
    );
    let out = bin()
        .args(["certify", "--problem"])
        .arg(&problem)
        .arg("--point")
        .arg(&point)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = DENSITY2.replace("\"kappa\": 1,", "\"kappa\": 1, \"mystery\": true,");
    let problem = write(dir.path(), "p.json", &text);
    let point = write(
        dir.path(),
        "x.json",
        r#"{"rows":2,"cols":2,"data":[1,0,0,0]}"#,
    );
    let out = bin()
        .args(["certify", "--problem"])
        .arg(&problem)
        .arg("--point")
        .arg(&point)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn project_clamps_the_correlation_example() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", CORRELATION2);
    let point = write(
        dir.path(),
        "x.json",
        r#"{"rows": 2, "cols": 2, "data": [1.0, 2.0, 2.0, 1.0]}"#,
    );
    let out = bin()
        .args(["project", "--problem"])
        .arg(&problem)
        .arg("--point")
        .arg(&point)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_of(&out);
    let data: Vec<f64> = v["point"]["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for (got, want) in data.iter().zip([1.0, 1.0, 1.0, 1.0]) {
        assert!((got - want).abs() <= 1e-8);
    }
}

#[test]
fn solve_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", DENSITY2);
    let trace = dir.path().join("trace.csv");
    let out = bin()
        .args(["solve", "--problem"])
        .arg(&problem)
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json_of(&out);
    assert!(v["best_value"].as_f64().unwrap() <= 0.04 + 1e-6);
    assert_eq!(v["stop_reason"], "converged");
    assert_eq!(v["xi_monotone"], serde_json::json!(true));
    let csv = fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,rho,f_Xk,f_Xhat,tail,penalty_value,xi,wall_ms"
    );
    for line in lines {
        assert_eq!(line.split(',').count(), 8);
    }
}

#[test]
fn solve_with_zero_stages_reports_only_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let text = DENSITY2.replace("\"max_stages\": 40", "\"max_stages\": 0");
    let problem = write(dir.path(), "p.json", &text);
    let out = bin()
        .args(["solve", "--problem"])
        .arg(&problem)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["stage_count"], serde_json::json!(1));
    assert_eq!(v["stages"].as_array().unwrap().len(), 1);
    assert_eq!(v["stop_reason"], "max_stages");
}

#[test]
fn sweep_reports_every_run() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", DENSITY2);
    let out = bin()
        .args(["solve", "--sweep", "3", "--problem"])
        .arg(&problem)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["runs"].as_array().unwrap().len(), 3);
    assert!(v["best_value"].as_f64().unwrap() <= 0.04 + 1e-6);
    let seeds: Vec<u64> = v["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, vec![5, 6, 7]);
}

#[test]
fn penalty_check_passes_above_threshold_and_fails_below() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", CORRELATION2);
    let out = bin()
        .args(["penalty-check", "--problem"])
        .arg(&problem)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json_of(&out);
    assert_eq!(v["pass"], serde_json::json!(true));
    assert!(v["gap"].as_f64().unwrap() <= 5e-3);

    // negative control: force rho far below the threshold
    let threshold = v["threshold"].as_f64().unwrap();
    let out = bin()
        .args(["penalty-check", "--rho0"])
        .arg(format!("{}", 0.01 * threshold))
        .arg("--problem")
        .arg(&problem)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["pass"], serde_json::json!(false));
    assert!(v["gap"].as_f64().unwrap() > 5e-2);
}

#[test]
fn penalty_check_rejects_oversized_problems() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "set": {"kind": "density", "n": 10},
        "kappa": 1,
        "objective": {"kind": "matrix_distance",
                      "M": {"rows": 10, "cols": 10,
                            "data": [0,0,0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0,0,
                                     0,0,0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0,0,
                                     0,0,0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0,0,
                                     0,0,0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0,0,
                                     0,0,0,0,0,0,0,0,0,0, 0,0,0,0,0,0,0,0,0,0]}}
    }"#;
    let problem = write(dir.path(), "p.json", text);
    let out = bin()
        .args(["penalty-check", "--problem"])
        .arg(&problem)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn emitted_reports_reparse_as_documented_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.json", DENSITY2);
    let point = write(
        dir.path(),
        "x.json",
        r#"{"rows": 2, "cols": 2, "data": [0.5, 0.0, 0.0, 0.5]}"#,
    );
    let out = bin()
        .args(["certify", "--problem"])
        .arg(&problem)
        .arg("--point")
        .arg(&point)
        .output()
        .unwrap();
    let v = json_of(&out);
    // the emitted witness must itself be a valid point file
    let witness_text = serde_json::to_string(&v["witness"]["witness"]).unwrap();
    let reparse = write(dir.path(), "w.json", &witness_text);
    let out = bin()
        .args(["project", "--problem"])
        .arg(&problem)
        .arg("--point")
        .arg(&reparse)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = json_of(&out);
    assert!(v["distance"].as_f64().unwrap() <= 1e-8);
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn supmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supmax")).args(args).output().expect("spawn supmax")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

struct Fixture {
    _dir: tempfile::TempDir,
    x: String,
    y: String,
    id2: String,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", r#"{"k": 2, "data": [1, 0.9, 0.9, 1]}"#);
    let y = write(dir.path(), "y.json", r#"{"k": 2, "data": [1.5, 1, 1, 1.5]}"#);
    let id2 = write(dir.path(), "id2.json", r#"{"k": 2, "data": [1, 0, 0, 1]}"#);
    Fixture { _dir: dir, x, y, id2 }
}

#[test]
fn check_exit_codes() {
    let f = fixture();
    let out = supmax(&["check", &f.x, &f.y]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["sf"], true);
    assert_eq!(v["strong"], true);
    assert!((v["M"].as_f64().unwrap() - 1.2).abs() < 1e-12);

    let out = supmax(&["check", &f.y, &f.x]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["sf_failures"], serde_json::json!([[0, 1]]));

    let dir = tempfile::tempdir().unwrap();
    let corr = write(dir.path(), "c.json", r#"{"k": 2, "data": [1, 0.5, 0.5, 1]}"#);
    let out = supmax(&["check", &corr, &f.id2]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["strong_failures"], serde_json::json!([[0, 1]]));
}

#[test]
fn usage_errors_exit_one() {
    let f = fixture();
    let out = supmax(&["check", &f.x]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(supmax(&["estimate", &f.x, "--n", "10"]).status.code(), Some(1));
    assert_eq!(supmax(&["estimate", &f.x, "--m", "0.5"]).status.code(), Some(1));
    assert_eq!(supmax(&["estimate", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(supmax(&["interpolate", &f.x, &f.y, "--p", "3"]).status.code(), Some(1));
    assert_eq!(supmax(&["bogus"]).status.code(), Some(1));
    assert_eq!(supmax(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"k": 2, "data": [1, 2, 3]}"#);
    assert_eq!(supmax(&["check", &bad, &f.x]).status.code(), Some(1));
    let neg = write(dir.path(), "neg.json", r#"{"k": 2, "data": [1, 2, 2, 1]}"#);
    assert_eq!(supmax(&["check", &neg, &f.x]).status.code(), Some(1));
    let garbage = write(dir.path(), "garbage.json", "not json");
    assert_eq!(supmax(&["check", &garbage, &f.x]).status.code(), Some(1));
}

#[test]
fn estimate_matches_closed_form() {
    let f = fixture();
    let out = supmax(&["estimate", "--m", "2", "--n", "1000000", "--seed", "7", &f.id2]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let value = v["value"].as_f64().unwrap();
    let se = v["std_error"].as_f64().unwrap();
    let exact = 1.0 + 2.0 / std::f64::consts::PI;
    assert!((value - exact).abs() < 4.0 * se, "{value} vs {exact}");
}

#[test]
fn compare_and_corollary_codes() {
    let f = fixture();
    let out = supmax(&["compare", &f.x, &f.y, "--n", "100000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "consistent");
    let out = supmax(&["compare", &f.y, &f.x, "--n", "100000"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json(&out)["verdict"], "violation");

    let out = supmax(&["corollary", &f.x, &f.y, "--n", "100000", "--m", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["constant_factor_applies"], true);
    assert_eq!(supmax(&["corollary", &f.y, &f.x, "--n", "100000"]).status.code(), Some(3));
}

#[test]
fn interpolate_and_decay() {
    let f = fixture();
    let out = supmax(&["interpolate", &f.x, &f.y, "--n", "50000", "--grid-points", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["gi"]["u_grid"].as_array().unwrap().len(), 5);
    assert_eq!(v["path_bounds"]["coordinates"], serde_json::json!([0, 1]));

    let out = supmax(&["decay", "--corr", "-0.5", "--var-x", "2", "--p-max", "128"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["p_grid"].as_array().unwrap().len(), 6);
    assert_eq!(v["bounded_1"], true);
    assert_eq!(supmax(&["decay", "--corr", "1.0"]).status.code(), Some(1));
}

#[test]
fn suite_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"n_strong": 2, "n_sf_only": 2, "n_samples": 10000}"#);
    let report = dir.path().join("report.json");
    let out = supmax(&["suite", "--config", &cfg, "--output", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("moment_order"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["n_instances"], 4);
    assert_eq!(v["failures"], serde_json::json!([]));

    let bad = write(dir.path(), "bad.json", r#"{"n_strong": 2, "typo": 1}"#);
    assert_eq!(supmax(&["suite", "--config", &bad]).status.code(), Some(1));
}

#[test]
fn pretty_and_compact_agree() {
    let f = fixture();
    let a = json(&supmax(&["estimate", &f.x, "--n", "5000", "--seed", "3"]));
    let b = json(&supmax(&["estimate", &f.x, "--n", "5000", "--seed", "3", "--format", "pretty"]));
    assert_eq!(a, b);
    let c = json(&supmax(&["estimate", &f.x, "--n", "5000", "--seed", "4"]));
    assert_ne!(a, c);
}

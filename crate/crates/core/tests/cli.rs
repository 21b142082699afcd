//! End-to-end runs of the `quasistat` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn quasistat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasistat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn walk_file(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut full = vec!["randomwalk"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path_str(&path)]);
    let out = quasistat(&full);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn walk_file_feeds_qed() {
    let dir = TempDir::new().unwrap();
    let problem = walk_file(&dir, "walk.json", &["--p", "0.3", "--N", "3", "--start", "1"]);
    let report = dir.path().join("qed.json");
    let out = quasistat(&["qed", "--in", path_str(&problem), "--out", path_str(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let json = read_json(&report);
    // sin²(xπ/6) normalized over x = 1..5
    let expect = [0.0, 0.25, 0.75, 1.0, 0.75, 0.25, 0.0];
    for (x, e) in expect.iter().enumerate() {
        let got = json["eta"][x.to_string()].as_f64().unwrap();
        assert!((got - e / 3.0).abs() < 1e-9, "x={x}: {got}");
    }
}

#[test]
fn periodic_walk_has_no_limit_law() {
    let dir = TempDir::new().unwrap();
    let problem = walk_file(&dir, "k2.json", &["--p", "0.5", "--K", "2", "--start", "1"]);
    let report = dir.path().join("cycle.json");
    let out = quasistat(&["qld-cycle", "--in", path_str(&problem), "--out", path_str(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let json = read_json(&report);
    assert_eq!(json["verdict"], "no quasi-limiting distribution");
    assert_eq!(json["cycle"].as_array().unwrap().len(), 2);
    assert!(report.with_extension("csv").exists());
}

#[test]
fn oracle_approaches_the_spectral_limit() {
    let dir = TempDir::new().unwrap();
    let problem = walk_file(&dir, "walk.json", &["--p", "0.4", "--N", "4", "--start", "3"]);
    let f = write(&dir, "f.json", r#"{"2": 1.0, "3": 2.0, "5": -1.0}"#);
    let report = dir.path().join("oracle.json");
    let out = quasistat(&[
        "oracle", "--in", path_str(&problem), "--f", path_str(&f), "--n", "2000", "--tol", "1e-2", "--out",
        path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json = read_json(&report);
    assert_eq!(json["within_tol"], true);
    let diff = json["abs_difference"].as_f64().unwrap();
    assert!(diff <= 1e-2, "{diff}");
}

#[test]
fn tied_classes_exit_as_inapplicable() {
    let dir = TempDir::new().unwrap();
    let problem = write(
        &dir,
        "tie.json",
        r#"{
  "states": ["a", "b", "dead"],
  "kernel": [[0.5, 0.0, 0.5], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]],
  "gamma": 1,
  "killing_sets": [["dead"]],
  "initial": {"a": 0.5, "b": 0.5}
}"#,
    );
    let report = dir.path().join("qed.json");
    let out = quasistat(&["qed", "--in", path_str(&problem), "--out", path_str(&report)]);
    assert_eq!(out.status.code(), Some(2));
    let json = read_json(&report);
    assert_eq!(json["status"], "inapplicable");
    assert_eq!(json["tied_classes"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_input_reports_its_location() {
    let dir = TempDir::new().unwrap();
    let broken = write(&dir, "broken.json", "{\n  \"states\": [\"a\",\n  \"kernel\": }\n");
    let out = quasistat(&["validate", "--in", path_str(&broken)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let bad_row = write(
        &dir,
        "row.json",
        r#"{"states": ["a", "b"], "kernel": [[1.0, 0.0], [0.5]], "gamma": 1,
            "killing_sets": [["b"]], "initial": {"a": 1.0}}"#,
    );
    let out = quasistat(&["validate", "--in", path_str(&bad_row)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kernel[1]"));

    let out = quasistat(&["qed", "--in", path_str(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let out = quasistat(&["randomwalk", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_carry_the_input_digest() {
    let dir = TempDir::new().unwrap();
    let problem = walk_file(&dir, "walk.json", &["--p", "0.5", "--N", "3", "--start", "3"]);
    let bytes = std::fs::read(&problem).unwrap();
    let digest = quasistat::io::sha256_hex(&bytes);
    let report = dir.path().join("sim.json");
    let out = quasistat(&[
        "simulate", "--in", path_str(&problem), "--paths", "2000", "--horizon", "10", "--seed", "7", "--out",
        path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json = read_json(&report);
    assert_eq!(json["input_digest"], digest.as_str());
    assert_eq!(json["seed"], 7);
    assert_eq!(json["tool"], "quasistat");

    let again = dir.path().join("sim2.json");
    quasistat(&[
        "simulate", "--in", path_str(&problem), "--paths", "2000", "--horizon", "10", "--seed", "7", "--shards", "4",
        "--out", path_str(&again),
    ]);
    let (a, b) = (read_json(&report), read_json(&again));
    assert_eq!(a["survival"], b["survival"]);
}

//! End-to-end tests of the `motdt` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn motdt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motdt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

struct Inputs {
    dir: TempDir,
}

impl Inputs {
    fn new() -> Self {
        Inputs {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> String {
        let p: PathBuf = self.dir.path().join(name);
        std::fs::write(&p, contents).unwrap();
        p.to_str().unwrap().to_string()
    }
}

const D4: &str = r#"{"r": 2, "flags": {"0": {"1": 1, "2": 1}, "1": {"1": 1, "2": 1},
    "2": {"1": 1, "2": 1}, "3": {"1": 1, "2": 1}}, "d": 0}"#;
const ZERO: &str = r#"{"basis_dim": 0, "values": {}}"#;

#[test]
fn conn_class_rank_one() {
    let inp = Inputs::new();
    let g = inp.file("g.json", r#"{"r": 1, "flags": {"0": {"1": 1}}, "d": 0}"#);
    let z = inp.file("z.json", ZERO);
    let out = motdt(&["conn-class", "--gamma", &g, "--zeta", &z]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["class"]["display"], "1/(q-1)");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn higgs_class_generic_affine_d4() {
    let inp = Inputs::new();
    let g = inp.file("g.json", D4);
    let z = inp.file("z.json", ZERO);
    let s = inp.file("s.json", r#"{"0": {"2": "1/7"}, "1": {"2": "2/11"}, "2": {"2": "3/13"}, "3": {"2": "5/17"}}"#);
    let out = motdt(&["higgs-class", "--gamma", &g, "--zeta", &z, "--sigma", &s]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["class"]["display"], "(q^2+5*q)/(q-1)");
}

#[test]
fn nonempty_affine_d4_is_one_imaginary_root() {
    let inp = Inputs::new();
    let g = inp.file("g.json", D4);
    let z = inp.file("z.json", ZERO);
    let out = motdt(&["nonempty", "--kind", "conn", "--gamma", &g, "--zeta", &z, "--genus", "0"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["nonempty"], "yes");
    let w = v["witness"].as_array().unwrap();
    assert_eq!(w.len(), 1);
    assert_eq!(w[0]["root_kind"], "imaginary");
}

#[test]
fn nonempty_degree_obstruction() {
    let inp = Inputs::new();
    let g = inp.file("g.json", r#"{"r": 1, "flags": {"0": {"1": 1}}, "d": -1}"#);
    let z = inp.file("z.json", ZERO);
    let out = motdt(&["nonempty", "--kind", "conn-ss", "--gamma", &g, "--zeta", &z, "--kappa", "0", "--genus", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["nonempty"], "no");
}

#[test]
fn dt_table_is_deterministic() {
    let args = ["dt", "--points", "2", "--rank-max", "2", "--deg-min", "-1"];
    let a = motdt(&args);
    let b = motdt(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    let rows = v["invariants"].as_array().unwrap();
    assert!(!rows.is_empty());
    for row in rows.iter().filter(|r| r["gamma"]["r"] == 1) {
        assert_eq!(row["B"]["display"], "q/(q-1)");
    }
}

#[test]
fn macdonald_two() {
    let out = motdt(&["macdonald", "--lambda", "2"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["symfun"]["coeffs"]["2"], "1");
    assert_eq!(v["symfun"]["coeffs"]["1,1"], "q + 1");
}

#[test]
fn oracle_grid_file() {
    let inp = Inputs::new();
    let grid = inp.file(
        "grid.json",
        r#"{"cases": [{"q": 2, "lambda": "2", "gamma": {"r": 2, "flags": {"0": {"1": 1, "2": 1}}, "d": -1}, "points": {"0": 0}},
                      {"q": 3, "lambda": "1,1", "gamma": {"r": 2, "flags": {"0": {"1": 1, "2": 1}}, "d": 0}, "points": {"0": "inf"}}]}"#,
    );
    let out = motdt(&["oracle", "--grid", &grid]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_macdonald_suite() {
    let out = motdt(&["verify", "--suite", "macdonald"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["passed"], true);
}

fn assert_single_line_error(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    let v: Value = serde_json::from_str(err.trim_end()).unwrap();
    assert!(v["error"]["message"].is_string());
    assert!(v["version"].is_string());
}

#[test]
fn schema_errors_exit_2() {
    let inp = Inputs::new();
    let bad = inp.file("bad.json", r#"{"r": "two"}"#);
    let z = inp.file("z.json", ZERO);
    assert_single_line_error(&motdt(&["conn-class", "--gamma", &bad, "--zeta", &z]), 2);
    let junk = inp.file("junk.json", "{not json");
    assert_single_line_error(&motdt(&["conn-class", "--gamma", &junk, "--zeta", &z]), 2);
    assert_single_line_error(&motdt(&["conn-class", "--gamma", "/nonexistent", "--zeta", &z]), 2);
    assert_single_line_error(&motdt(&["macdonald", "--lambda", "2,x"]), 2);
    assert_single_line_error(&motdt(&["dt", "--points", "1", "--rank-max", "1", "--deg-min", "3"]), 2);
    assert_eq!(motdt(&["verify", "--suite", "bogus"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1() {
    let inp = Inputs::new();
    let g = inp.file("g.json", D4);
    let z = inp.file("z.json", r#"{"basis_dim": 0, "values": {"0": {"1": ["1"]}}}"#);
    let s = inp.file("s.json", r#"{"0": {"2": "1/2"}}"#);
    let out = motdt(&["conn-class", "--gamma", &g, "--zeta", &z, "--kappa", "0", "--sigma", &s]);
    assert_single_line_error(&out, 1);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn qssa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qssa")).args(args).output().expect("spawn qssa")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    let v: Value = serde_json::from_slice(&o.stdout).expect("JSON on stdout");
    assert_eq!(v["schema"], 1, "schema field in {v}");
    v
}

fn tmp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qssa-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const DOUBLE_USE: &str = "module {
  func @main : () -> () {
  ^bb0:
    %0 = qssa.alloc : () -> (qubit<1>)
    %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)
    %2 = qssa.X %0 : (qubit<1>) -> (qubit<1>)
    return : () -> ()
  }
}
";

#[test]
fn parse_prints_canonical_qasm() {
    let o = qssa(&["parse", path(&corpus("bell.qasm"))]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("OPENQASM 2.0;"));
    let o = qssa(&["parse", "--json", path(&corpus("bell.qasm"))]);
    assert!(o.status.success());
    json(&o);
}

#[test]
fn raise_then_reparse_ir() {
    let o = qssa(&["raise", path(&corpus("bell.qasm"))]);
    assert!(o.status.success());
    let ir = stdout(&o);
    assert!(ir.contains("qssa.H") && ir.contains("qssa.measure"));
    let p = tmp("bell.qssa", &ir);
    let o = qssa(&["parse", path(&p)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), ir);
}

#[test]
fn verify_exit_codes() {
    let o = qssa(&["verify", path(&corpus("teleport.qasm"))]);
    assert_eq!(o.status.code(), Some(0));
    let bad = tmp("double.qssa", DOUBLE_USE);
    let o = qssa(&["verify", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let o = qssa(&["verify", "--json", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["ok"], false);
    assert_eq!(v["diagnostics"][0]["lines"][0], 5);
}

#[test]
fn opt_reduces_cancellations() {
    let o = qssa(&["opt", "--report", "json", path(&corpus("micro/hh.qasm"))]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("qssa.H"));
    let report: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(report["schema"], 1);
    let o = qssa(&["opt", "-p", "bogus", path(&corpus("micro/hh.qasm"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lower_ghz() {
    let o = qssa(&["lower", path(&corpus("ghz3.qasm"))]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("cx q[0],q[1];"));
}

#[test]
fn sim_bell_distribution() {
    let o = qssa(&["sim", "--json", path(&corpus("bell.qasm"))]);
    assert!(o.status.success());
    let d = json(&o)["distribution"].as_object().unwrap().clone();
    assert_eq!(d.len(), 2);
    for p in d.values() {
        assert!((p.as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn equiv_modes_and_exit_codes() {
    let a = tmp("hz.qasm", "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\nh q[0];\nz q[0];\nh q[0];\n");
    let b = tmp("x.qasm", "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\nx q[0];\n");
    let c = tmp("y.qasm", "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\nh q[0];\n");
    let o = qssa(&["equiv", "--json", path(&a), path(&b)]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["mode"], "unitary");
    assert_eq!(v["equivalent"], true);
    let o = qssa(&["equiv", path(&a), path(&c)]);
    assert_eq!(o.status.code(), Some(1));
    let o = qssa(&["equiv", "--json", path(&corpus("bell.qasm")), path(&corpus("bell.qasm"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["mode"], "distribution");
}

#[test]
fn stats_bell() {
    let o = qssa(&["stats", "--json", path(&corpus("bell.qasm"))]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["metrics"]["gate_count"], 4);
    assert_eq!(v["metrics"]["depth"], 3);
    let o = qssa(&["stats", path(&corpus("bell.qasm"))]);
    assert!(stdout(&o).starts_with("gate_count 4\ndepth 3\n"));
}

#[test]
fn bench_is_deterministic() {
    let dir = corpus("micro");
    let a = qssa(&["bench", "--json", path(&dir)]);
    let b = qssa(&["bench", "--json", path(&dir)]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    json(&a);
    let o = qssa(&["bench", path(&corpus("bell.qasm"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn roundtrip_corpus_file() {
    let o = qssa(&["roundtrip", "--json", path(&corpus("teleport.qasm"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    assert_eq!(v["ok"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 5);
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(qssa(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qssa(&["verify", "/nonexistent/file.qasm"]).status.code(), Some(2));
    let bad = tmp("bad.qasm", "OPENQASM 2.0;\nqreg q[1];\nfrob q[0];\n");
    let o = qssa(&["parse", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.qasm"));
    assert_eq!(qssa(&["--version"]).status.code(), Some(0));
}

#[test]
fn output_flag_writes_file() {
    let out = std::env::temp_dir().join(format!("qssa-cli-out-{}.qssa", std::process::id()));
    let o = qssa(&["raise", "-o", path(&out), path(&corpus("bell.qasm"))]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains("qssa.measure"));
    let _ = std::fs::remove_file(out);
}

use qssa_web::{optimize_qasm_json, simulate_qasm_json, verify_json};
use serde_json::Value;

const REDUNDANT: &str = "OPENQASM 2.0;
include \"qelib1.inc\";
qreg q[2];
creg c[2];
h q[0];
h q[0];
h q[0];
cx q[0],q[1];
measure q -> c;
";

fn parse(s: &str) -> Value {
    serde_json::from_str(s).expect("valid JSON")
}

#[test]
fn optimize_shrinks_and_lowers() {
    let r = parse(&optimize_qasm_json(REDUNDANT, "").unwrap());
    assert_eq!(r["schema"], 1);
    assert!(r["after"]["gate_count"].as_u64() < r["before"]["gate_count"].as_u64());
    assert!(r["qasm"].as_str().unwrap().starts_with("OPENQASM 2.0;"));
    assert!(r["lower_error"].is_null());
    assert!(!r["passes"].as_array().unwrap().is_empty());
}

#[test]
fn optimize_honours_custom_pipeline() {
    let r = parse(&optimize_qasm_json(REDUNDANT, "dce").unwrap());
    assert_eq!(r["passes"].as_array().unwrap().len(), 1);
    assert!(optimize_qasm_json(REDUNDANT, "no-such-pass").is_err());
}

#[test]
fn simulate_bell_distribution() {
    let r = parse(&simulate_qasm_json(REDUNDANT).unwrap());
    assert_eq!(r["schema"], 1);
    let dist = r["distribution"].as_object().unwrap();
    let total: f64 = dist.values().map(|p| p.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(dist.len(), 2);
}

#[test]
fn verify_accepts_qasm_and_rejects_double_use() {
    let r = parse(&verify_json(REDUNDANT).unwrap());
    assert_eq!(r["ok"], true);
    let bad = "module { func @main : () -> () { ^bb0: %0 = qssa.alloc : () -> (qubit<1>) %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>) %2 = qssa.H %0 : (qubit<1>) -> (qubit<1>) return : () -> () } }";
    let r = parse(&verify_json(bad).unwrap());
    assert_eq!(r["ok"], false);
    assert!(!r["diagnostics"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_input_is_an_error() {
    assert!(simulate_qasm_json("OPENQASM 2.0; qreg q[1]; frob q[0];").is_err());
    assert!(verify_json("module {").is_err());
}

//! Focused behaviour of the individual optimization passes and of lowering.

mod common;

use qssa::ir::{parse_ir, Module, OpKind};
use qssa::lower::{wire_trace, NotLowerable};
use qssa::metrics::compute_metrics;
use qssa::optimize::{parse_pipeline, run_dce, run_gvn, run_inline, run_peepholes, run_pipeline, run_unroll, OptOptions};
use qssa::sim::run_distribution;
use qssa::verify::{has_errors, verify_module};
use qssa::{lower, parse_qasm, print_ir, print_qasm, raise};

fn count(m: &Module, kind: &OpKind) -> usize {
    let mut n = 0;
    for f in &m.functions {
        f.body.walk(&mut |op| n += usize::from(&op.kind == kind));
    }
    n
}

fn top_level(m: &Module, kind: &OpKind) -> usize {
    m.main().unwrap().body.blocks[0].ops.iter().filter(|op| &op.kind == kind).count()
}

fn raised(body: &str) -> Module {
    raise(&parse_qasm(&format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n{body}")).unwrap()).unwrap()
}

fn gates(m: &Module) -> usize {
    compute_metrics(m).unwrap().gate_count
}

fn assert_same_distribution(a: &Module, b: &Module) {
    let tv = run_distribution(a).unwrap().tv_distance(&run_distribution(b).unwrap());
    assert!(tv <= 1e-9, "tv {tv}\n{}", print_ir(b));
}


#[test]
fn gvn_hoists_the_common_gate_out_of_both_branches() {
    let m = parse_ir(common::HOISTABLE_BRANCHES).unwrap();
    let (o, reports) = run_pipeline(&m, &["gvn"], OptOptions::default()).unwrap();
    assert_eq!(count(&o, &OpKind::H), 1, "{}", print_ir(&o));
    assert_eq!(top_level(&o, &OpKind::H), 1);
    assert!(reports[0].rewrites >= 1);
    assert!(!has_errors(&verify_module(&o).unwrap()));
    assert_same_distribution(&m, &o);
}

#[test]
fn gvn_does_not_hoist_gates_on_different_wires() {
    let text = common::HOISTABLE_BRANCHES
        .replace("%11 = qssa.H %0", "%11 = qssa.H %15")
        .replace("%2 = mem.alloc", "%15 = qssa.alloc : () -> (qubit<1>)\n    %2 = mem.alloc");
    let m = parse_ir(&text).unwrap();
    let (o, _) = run_gvn(&m);
    assert_eq!(top_level(&o, &OpKind::H), 0);
    assert_eq!(count(&o, &OpKind::H), 2);
}

#[test]
fn gvn_merges_duplicate_constants() {
    let m = raised("qreg q[1];\ncreg c[2];\nmeasure q[0] -> c[0];\nif(c==1) x q[0];\nif(c==1) y q[0];\n");
    let before = count(&m, &OpKind::ConstInt);
    let (o, _) = run_gvn(&m);
    assert!(count(&o, &OpKind::ConstInt) < before);
    assert_same_distribution(&m, &o);
}

#[test]
fn peephole_cancels_self_inverse_pairs() {
    for (body, left) in [
        ("x q[0];\nx q[0];\n", 0),
        ("h q[0];\nh q[0];\nh q[0];\n", 1),
        ("cx q[0],q[1];\ncx q[0],q[1];\n", 0),
        ("cx q[0],q[1];\ncx q[1],q[0];\n", 2),
        ("cx q[0],q[1];\ncx q[0],q[2];\n", 2),
        ("x q[0];\ny q[0];\nz q[0];\n", 0),
    ] {
        let (m, _) = run_peepholes(&raised(&format!("qreg q[3];\n{body}")));
        assert_eq!(gates(&m), left, "{body}");
    }
}

#[test]
fn barrier_blocks_cancellation() {
    let (m, report) = run_peepholes(&raised("qreg q[1];\nh q[0];\nbarrier q[0];\nh q[0];\n"));
    assert_eq!(report.rewrites, 0);
    assert_eq!(gates(&m), 2);
}

#[test]
fn pauli_triple_reports_the_dropped_phase() {
    let (m, report) = run_peepholes(&raised("qreg q[1];\nx q[0];\ny q[0];\nz q[0];\n"));
    assert_eq!(gates(&m), 0);
    assert_eq!(report.patterns.get("pauli-triple"), Some(&1));
    assert!(report.notes.iter().any(|n| n.contains("global phase")));
}

#[test]
fn rotations_merge_into_one_u() {
    let (m, _) = run_peepholes(&raised("qreg q[1];\nrx(0.3) q[0];\nrz(1.1) q[0];\nry(-0.4) q[0];\n"));
    assert_eq!(gates(&m), 1);
    assert_eq!(count(&m, &OpKind::U), 1);
}

#[test]
fn inverse_rotations_vanish() {
    let (m, _) = run_peepholes(&raised("qreg q[1];\nrz(0.7) q[0];\nrz(-0.7) q[0];\n"));
    assert_eq!(gates(&m), 0);
}

#[test]
fn diagonal_gate_before_measurement_is_dropped() {
    let m = raised("qreg q[1];\ncreg c[1];\nh q[0];\nt q[0];\nrz(0.2) q[0];\nmeasure q[0] -> c[0];\n");
    let (o, _) = run_pipeline(&m, &["peephole"], OptOptions::default()).unwrap();
    assert_eq!(count(&o, &OpKind::H), 1);
    assert_eq!(gates(&o), 2);
    assert_same_distribution(&m, &o);
}

#[test]
fn dce_keeps_measurements_unless_aggressive() {
    let text = "module {
  func @main : () -> () {
  ^bb0:
    %0 = qssa.alloc : () -> (qubit<1>)
    %1 = arith.const_int {value = 4} : () -> (i64)
    %2 = arith.const_int {value = 5} : () -> (i64)
    %3 = arith.addi %1, %2 : (i64, i64) -> (i64)
    %4 = qssa.H %0 : (qubit<1>) -> (qubit<1>)
    %5, %6 = qssa.measure %4 : (qubit<1>) -> (bits<1>, qubit<1>)
    return : () -> ()
  }
}
";
    let m = parse_ir(text).unwrap();
    let (safe, _) = run_dce(&m, false);
    assert_eq!(count(&safe, &OpKind::AddI) + count(&safe, &OpKind::ConstInt), 0);
    assert_eq!(count(&safe, &OpKind::Measure), 1);
    let (aggressive, _) = run_dce(&m, true);
    assert_eq!(count(&aggressive, &OpKind::Measure), 0);
}

#[test]
fn inliner_expands_and_drops_small_callees() {
    let text = "module {
  func @main : () -> () {
  ^bb0:
    %0 = qssa.alloc : () -> (qubit<1>)
    %1 = call @flip %0 : (qubit<1>) -> (qubit<1>)
    %2 = call @flip %1 : (qubit<1>) -> (qubit<1>)
    %3 = mem.alloc {size = 1} : () -> (mem<1>)
    %4, %5 = qssa.measure %2 : (qubit<1>) -> (bits<1>, qubit<1>)
    mem.store %3, %4 {index = 0} : (mem<1>, bits<1>) -> ()
    return : () -> ()
  }
  func @flip : (qubit<1>) -> (qubit<1>) {
  ^bb0(%0: qubit<1>):
    %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)
    return %1 : (qubit<1>) -> ()
  }
}
";
    let m = parse_ir(text).unwrap();
    let (o, _) = run_inline(&m);
    assert_eq!(o.functions.len(), 1);
    assert_eq!(count(&o, &OpKind::Call("flip".into())), 0);
    assert_eq!(count(&o, &OpKind::H), 2);
    assert!(!has_errors(&verify_module(&o).unwrap()));
    assert_same_distribution(&m, &o);
    // Once inlined, the peepholes see across the former call boundary.
    let (opt, _) = run_pipeline(&m, &parse_pipeline("inline,peephole,dce").unwrap(), OptOptions::default()).unwrap();
    assert_eq!(gates(&opt), 1);
}

fn loop_module(trip: i64) -> Module {
    parse_ir(&format!(
        "module {{
  func @main : () -> () {{
  ^bb0:
    %0 = qssa.alloc : () -> (qubit<1>)
    %1 = arith.const_int {{value = 0}} : () -> (i64)
    %2 = arith.const_int {{value = {trip}}} : () -> (i64)
    %3 = arith.const_int {{value = 1}} : () -> (i64)
    %4 = scf.for %1, %2, %3, %0 : (i64, i64, i64, qubit<1>) -> (qubit<1>) {{
    ^bb0(%5: i64, %6: qubit<1>):
      %7 = qssa.Ry %6 {{angle = 0.25}} : (qubit<1>) -> (qubit<1>)
      scf.yield %7 : (qubit<1>) -> ()
    }}
    %8 = mem.alloc {{size = 1}} : () -> (mem<1>)
    %9, %10 = qssa.measure %4 : (qubit<1>) -> (bits<1>, qubit<1>)
    mem.store %8, %9 {{index = 0}} : (mem<1>, bits<1>) -> ()
    return : () -> ()
  }}
}}
"
    ))
    .unwrap()
}

#[test]
fn unroll_flattens_short_constant_loops() {
    let m = loop_module(3);
    let (o, _) = run_unroll(&m);
    assert_eq!(count(&o, &OpKind::ScfFor), 0);
    assert_eq!(top_level(&o, &OpKind::Ry), 3);
    assert!(!has_errors(&verify_module(&o).unwrap()));
    assert_same_distribution(&m, &o);
    // Unrolled rotations then merge into one.
    let (opt, _) = run_pipeline(&m, &parse_pipeline("unroll,peephole,dce").unwrap(), OptOptions::default()).unwrap();
    assert_eq!(gates(&opt), 2);
}

#[test]
fn unroll_leaves_long_loops_alone() {
    let m = loop_module(1000);
    let (o, _) = run_unroll(&m);
    assert_eq!(count(&o, &OpKind::ScfFor), 1);
    assert_eq!(gates(&m), 1001);
}

#[test]
fn unknown_pass_names_are_rejected() {
    assert!(parse_pipeline("inline,frobnicate").is_err());
    assert_eq!(parse_pipeline("cse, peepholes").unwrap(), vec!["gvn".to_string(), "peephole".to_string()]);
}

#[test]
fn lowering_the_ghz_program_reproduces_it() {
    let src = std::fs::read_to_string(common::corpus_dir().join("ghz3.qasm")).unwrap();
    let m = raise(&parse_qasm(&src).unwrap()).unwrap();
    let text = print_qasm(&lower(&m).unwrap());
    assert_eq!(
        text,
        "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\ncreg c[3];\nh q[0];\ncx q[0],q[1];\ncx q[1],q[2];\nmeasure q[0] -> c[0];\nmeasure q[1] -> c[1];\nmeasure q[2] -> c[2];\n"
    );
}

#[test]
fn loops_and_dynamic_sizes_are_not_lowerable() {
    assert!(matches!(lower(&loop_module(3)), Err(NotLowerable(_))));
    let dynamic = "module {
  func @main : () -> () {
  ^bb0:
    %0 = arith.const_int {value = 2} : () -> (i64)
    %1 = qssa.alloc %0 : (i64) -> (qubit<?>)
    return : () -> ()
  }
}
";
    assert!(matches!(lower(&parse_ir(dynamic).unwrap()), Err(NotLowerable(_))));
}

#[test]
fn wire_trace_follows_split_pieces() {
    let text = "module {
  func @main : () -> () {
  ^bb0:
    %0 = qssa.alloc : () -> (qubit<1>)
    %1 = qssa.alloc : () -> (qubit<3>)
    %2, %3 = qssa.split %1 : (qubit<3>) -> (qubit<1>, qubit<2>)
    %4, %5 = qssa.split %3 : (qubit<2>) -> (qubit<1>, qubit<1>)
    %6 = qssa.H %5 : (qubit<1>) -> (qubit<1>)
    %7, %8 = qssa.CNOT %6, %0 : (qubit<1>, qubit<1>) -> (qubit<1>, qubit<1>)
    return : () -> ()
  }
}
";
    let trace = wire_trace(&parse_ir(text).unwrap()).unwrap();
    let w = |i: u32| trace[&qssa::ir::ValueId(i)];
    assert_eq!((w(0), w(2), w(4), w(5)), (0, 1, 2, 3));
    assert_eq!((w(6), w(7), w(8)), (3, 3, 0));
}

//! Textual round trip and the def-use index on random modules.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::StructuredGen;

use qssa::ir::{def_use_index, op_at, parse_ir, Function, Module, OpLoc, Operation, Region, ValueId};
use qssa::print_ir;

fn rich_module(seed: u64, sloppiness: f64) -> Module {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen = StructuredGen::new(&mut rng, 40);
    gen.rich = true;
    gen.sloppiness = sloppiness;
    gen.module()
}

/// Every operation with its location, collected independently of the
/// library's walkers.
fn all_ops(func: &Function) -> Vec<(OpLoc, &Operation)> {
    fn go<'a>(r: &'a Region, ri: usize, at: &OpLoc, out: &mut Vec<(OpLoc, &'a Operation)>) {
        for (bi, b) in r.blocks.iter().enumerate() {
            for (oi, op) in b.ops.iter().enumerate() {
                let loc = at.child(ri, bi, oi);
                out.push((loc.clone(), op));
                for (rj, sub) in op.regions.iter().enumerate() {
                    go(sub, rj, &loc, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(&func.body, 0, &OpLoc::new(func.name.clone()), &mut out);
    out
}

/// Quadratic reference: for each value, scan every operation's operand
/// list and successor arguments.
fn naive_uses(func: &Function, v: ValueId) -> Vec<(OpLoc, usize)> {
    let mut out = Vec::new();
    for (loc, op) in all_ops(func) {
        let slots = op.operands.iter().chain(op.successors.iter().flat_map(|s| s.args.iter()));
        for (slot, u) in slots.enumerate() {
            if *u == v {
                out.push((loc.clone(), slot));
            }
        }
    }
    out
}

#[test]
fn rich_modules_cover_the_whole_instruction_set() {
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..200 {
        let m = rich_module(seed, 0.1);
        for f in &m.functions {
            for (_, op) in all_ops(f) {
                seen.insert(op.kind.name());
            }
        }
    }
    for name in [
        "qssa.alloc", "qssa.CNOT", "qssa.H", "qssa.U", "qssa.Rz", "qssa.Ry", "qssa.gate", "qssa.measure", "qssa.split",
        "qssa.cast", "qssa.dim", "qssa.barrier", "qssa.reset", "call", "return", "scf.if", "scf.for", "scf.yield",
        "arith.const_int", "arith.const_angle", "arith.cmpi", "mem.alloc", "mem.store", "mem.load", "cf.br", "cf.cond_br",
    ] {
        assert!(seen.contains(name), "{name} never generated");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_is_the_identity(seed in any::<u64>(), sloppiness in 0.0f64..0.2) {
        let m = rich_module(seed, sloppiness);
        let text = print_ir(&m);
        let back = parse_ir(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(print_ir(&back), text);
    }

    #[test]
    fn def_use_index_matches_a_linear_scan(seed in any::<u64>()) {
        let m = rich_module(seed, 0.15);
        let index = def_use_index(&m);
        for f in &m.functions {
            let table = index.function(&f.name).expect("every function indexed");
            for v in f.value_types().keys() {
                let got: Vec<(OpLoc, usize)> = index.uses(&f.name, *v).iter().map(|u| (u.loc.clone(), u.slot)).collect();
                prop_assert_eq!(&got, &naive_uses(f, *v), "value {}", v);
                prop_assert!(table.contains_key(v));
                for (loc, _) in &got {
                    prop_assert!(op_at(&m, loc).is_some());
                }
            }
        }
    }
}

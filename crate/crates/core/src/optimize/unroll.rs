use std::collections::HashMap;

use super::util::{clone_ops_fresh, module_op_count, substitute_region};
use super::PassReport;
use crate::ir::{Attr, Module, OpKind, Operation, Region, Type, Value, ValueAllocator, ValueId};

/// Loops with more iterations than this are kept.
pub const MAX_UNROLL_TRIP: i64 = 32;
/// Upper bound on the operations a single unrolling may produce.
const MAX_UNROLLED_OPS: usize = 4096;

/// Fully unrolls `scf.for` loops whose bounds and step are integer
/// constants. The induction variable becomes an `arith.const_int` per
/// iteration, so an inner loop whose bounds depend on it is unrolled on the
/// next round.
pub fn run_unroll(module: &Module) -> (Module, PassReport) {
    let before = module_op_count(&module.functions);
    let mut out = module.clone();
    let mut total = 0;
    for f in &mut out.functions {
        for _ in 0..8 {
            let mut consts = HashMap::new();
            f.body.walk(&mut |op| {
                if op.kind == OpKind::ConstInt {
                    if let Some(v) = op.attr_int("value") {
                        consts.insert(op.results[0].id, v);
                    }
                }
            });
            let mut ids = f.value_allocator();
            let mut subst = HashMap::new();
            let n = unroll_region(&mut f.body, &consts, &mut ids, &mut subst);
            substitute_region(&mut f.body, &subst);
            total += n;
            if n == 0 {
                break;
            }
        }
    }
    let after = module_op_count(&out.functions);
    (out, PassReport::new("unroll", before, after, total))
}

fn trip_count(op: &Operation, consts: &HashMap<ValueId, i64>) -> Option<(i64, i64, i64)> {
    let c = |i: usize| consts.get(op.operands.get(i)?).copied();
    let (lb, ub, step) = (c(0)?, c(1)?, c(2)?);
    if step <= 0 {
        return None;
    }
    let trip = if ub <= lb { 0 } else { (i128::from(ub) - i128::from(lb) - 1) / i128::from(step) + 1 };
    (trip <= i128::from(MAX_UNROLL_TRIP)).then_some((lb, step, trip as i64))
}

fn unroll_region(
    region: &mut Region,
    consts: &HashMap<ValueId, i64>,
    ids: &mut ValueAllocator,
    subst: &mut HashMap<ValueId, ValueId>,
) -> usize {
    let mut n = 0;
    for block in &mut region.blocks {
        let mut out = Vec::with_capacity(block.ops.len());
        for mut op in std::mem::take(&mut block.ops) {
            for r in &mut op.regions {
                n += unroll_region(r, consts, ids, subst);
                substitute_region(r, subst);
            }
            let plan = (op.kind == OpKind::ScfFor && op.regions[0].blocks.len() == 1)
                .then(|| trip_count(&op, consts))
                .flatten()
                .filter(|&(_, _, trip)| trip as usize * op.regions[0].op_count() <= MAX_UNROLLED_OPS);
            let Some((lb, step, trip)) = plan else {
                out.push(op);
                continue;
            };
            let body = &op.regions[0].blocks[0];
            let Some((yield_op, ops)) = body.ops.split_last().filter(|(y, _)| y.kind == OpKind::Yield) else {
                out.push(op);
                continue;
            };
            let mut carried: Vec<ValueId> = op.operands[3..].to_vec();
            for k in 0..trip {
                let iv = ids.fresh();
                out.push(
                    Operation::new(OpKind::ConstInt, vec![], vec![Value::new(iv, Type::Int)])
                        .with_attr("value", Attr::Int(lb + k * step)),
                );
                let mut map: HashMap<ValueId, ValueId> = HashMap::new();
                map.insert(body.args[0].id, iv);
                for (a, c) in body.args[1..].iter().zip(&carried) {
                    map.insert(a.id, *c);
                }
                out.extend(clone_ops_fresh(ops, &mut map, ids));
                carried = yield_op.operands.iter().map(|v| map.get(v).copied().unwrap_or(*v)).collect();
            }
            for (r, c) in op.result_ids().zip(carried) {
                subst.insert(r, c);
            }
            n += 1;
        }
        block.ops = out;
    }
    n
}

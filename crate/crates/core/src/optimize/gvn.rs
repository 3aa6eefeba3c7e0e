use std::collections::HashMap;

use super::util::{module_op_count, substitute_op, substitute_region};
use super::PassReport;
use crate::ir::{Function, Module, OpKind, Operation, Region, Value, ValueAllocator, ValueId};

/// Scoped value numbering for classical arithmetic, plus hoisting and
/// sinking of gates that both arms of an `scf.if` apply identically.
///
/// Qubit-typed operations are never deduplicated: two `H` gates on the same
/// SSA qubit would be a double use, not a common subexpression.
pub fn run_gvn(module: &Module) -> (Module, PassReport) {
    let before = module_op_count(&module.functions);
    let mut out = module.clone();
    let mut rewrites = 0;
    let mut notes = Vec::new();
    for f in &mut out.functions {
        let mut subst = HashMap::new();
        let dedup = number_region(&mut f.body, &HashMap::new(), &mut subst);
        substitute_region(&mut f.body, &subst);
        let (hoisted, sunk) = move_branch_gates(f);
        rewrites += dedup + hoisted + sunk;
        if hoisted + sunk > 0 {
            notes.push(format!("@{}: hoisted {hoisted} and sank {sunk} gate(s) out of scf.if", f.name));
        }
    }
    let mut report = PassReport::new("gvn", before, module_op_count(&out.functions), rewrites);
    report.notes = notes;
    (out, report)
}

type Key = (String, Vec<ValueId>, String);

fn key(op: &Operation) -> Option<Key> {
    use OpKind::*;
    matches!(op.kind, ConstInt | ConstAngle | AddI | SubI | MulI | CmpI)
        .then(|| (op.kind.name().to_string(), op.operands.clone(), format!("{:?}", op.attrs)))
}

fn number_region(
    region: &mut Region,
    outer: &HashMap<Key, ValueId>,
    subst: &mut HashMap<ValueId, ValueId>,
) -> usize {
    let mut removed = 0;
    for block in &mut region.blocks {
        // Across CFG blocks only the enclosing scope is shared; a value from
        // a sibling block need not dominate this one.
        let mut table = outer.clone();
        let mut kept = Vec::with_capacity(block.ops.len());
        for mut op in std::mem::take(&mut block.ops) {
            substitute_op(&mut op, subst);
            if let Some(k) = key(&op) {
                if let Some(&prev) = table.get(&k) {
                    subst.insert(op.results[0].id, prev);
                    removed += 1;
                    continue;
                }
                table.insert(k, op.results[0].id);
            }
            for r in &mut op.regions {
                removed += number_region(r, &table, subst);
            }
            kept.push(op);
        }
        block.ops = kept;
    }
    removed
}

fn move_branch_gates(f: &mut Function) -> (usize, usize) {
    let mut ids = f.value_allocator();
    let mut counts = (0, 0);
    walk_blocks(&mut f.body, &mut ids, &mut counts);
    counts
}

fn walk_blocks(region: &mut Region, ids: &mut ValueAllocator, counts: &mut (usize, usize)) {
    for block in &mut region.blocks {
        let mut out = Vec::with_capacity(block.ops.len());
        for mut op in std::mem::take(&mut block.ops) {
            for r in &mut op.regions {
                walk_blocks(r, ids, counts);
            }
            if op.kind == OpKind::ScfIf && op.regions.iter().all(|r| r.blocks.len() == 1) {
                while let Some(g) = hoist_one(&mut op) {
                    out.push(g);
                    counts.0 += 1;
                }
                out.push(op);
                let mut after = Vec::new();
                let if_idx = out.len() - 1;
                while let Some(g) = sink_one(&mut out[if_idx], ids) {
                    after.push(g);
                    counts.1 += 1;
                }
                out.extend(after);
            } else {
                out.push(op);
            }
        }
        block.ops = out;
    }
}

fn same_gate(a: &Operation, b: &Operation) -> bool {
    a.kind.is_gate() && a.kind == b.kind && a.attrs == b.attrs
}

/// Moves one gate that both arms apply to the same outer values in front
/// of the `scf.if`.
fn hoist_one(if_op: &mut Operation) -> Option<Operation> {
    let [then_r, else_r] = [if_op.regions.first()?.clone(), if_op.regions.get(1)?.clone()];
    let local = |r: &Region| {
        let mut s = std::collections::HashSet::new();
        r.walk_defs(&mut |v| {
            s.insert(v.id);
        });
        s
    };
    let (tl, el) = (local(&then_r), local(&else_r));
    let tb = &then_r.blocks[0];
    let eb = &else_r.blocks[0];
    for (ti, a) in tb.ops.iter().enumerate() {
        if !a.kind.is_gate() || a.operands.iter().any(|v| tl.contains(v)) {
            continue;
        }
        let Some(ei) = eb
            .ops
            .iter()
            .position(|b| same_gate(a, b) && b.operands == a.operands && !b.operands.iter().any(|v| el.contains(v)))
        else {
            continue;
        };
        let hoisted = a.clone();
        let dup = eb.ops[ei].clone();
        let subst: HashMap<ValueId, ValueId> = dup.result_ids().zip(hoisted.result_ids()).collect();
        if_op.regions[0].blocks[0].ops.remove(ti);
        if_op.regions[1].blocks[0].ops.remove(ei);
        substitute_region(&mut if_op.regions[1], &subst);
        return Some(hoisted);
    }
    None
}

/// Moves one single-qubit gate whose result both arms yield at the same
/// position to just after the `scf.if`. The `scf.if` result is renamed and
/// the new gate takes over its old name, so later uses need no rewriting.
fn sink_one(if_op: &mut Operation, ids: &mut ValueAllocator) -> Option<Operation> {
    let yields = |r: &Region| r.blocks[0].ops.last().filter(|o| o.kind == OpKind::Yield).map(|o| o.operands.clone());
    let ty = yields(&if_op.regions[0])?;
    let ey = yields(&if_op.regions[1])?;
    let producer = |r: &Region, v: ValueId| -> Option<usize> {
        r.blocks[0].ops.iter().position(|o| o.result_ids().any(|x| x == v))
    };
    let use_count = |r: &Region, v: ValueId| {
        let mut n = 0;
        r.walk(&mut |o| n += o.all_uses().filter(|&u| u == v).count());
        n
    };
    for pos in 0..ty.len() {
        let (Some(ti), Some(ei)) = (producer(&if_op.regions[0], ty[pos]), producer(&if_op.regions[1], ey[pos])) else {
            continue;
        };
        let a = &if_op.regions[0].blocks[0].ops[ti];
        let b = &if_op.regions[1].blocks[0].ops[ei];
        if !same_gate(a, b)
            || !a.kind.is_single_qubit_gate()
            || a.operands.len() != 1
            || b.operands.len() != 1
            || use_count(&if_op.regions[0], ty[pos]) != 1
            || use_count(&if_op.regions[1], ey[pos]) != 1
        {
            continue;
        }
        let (a_in, b_in) = (a.operands[0], b.operands[0]);
        let mut sunk = a.clone();
        let t = &mut if_op.regions[0].blocks[0];
        t.ops.remove(ti);
        let y = t.ops.last_mut().expect("yield present");
        y.operands[pos] = a_in;
        let e = &mut if_op.regions[1].blocks[0];
        e.ops.remove(ei);
        let y = e.ops.last_mut().expect("yield present");
        y.operands[pos] = b_in;
        let old = if_op.results[pos];
        let fresh = Value::new(ids.fresh(), old.ty);
        if_op.results[pos] = fresh;
        sunk.operands = vec![fresh.id];
        sunk.results = vec![old];
        return Some(sunk);
    }
    None
}

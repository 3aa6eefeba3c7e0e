use std::collections::{BTreeSet, HashMap};

use super::util::{clone_ops_fresh, module_op_count, substitute_region};
use super::PassReport;
use crate::ir::{Function, Module, OpKind, Operation, Region, ValueAllocator, ValueId};

/// Callees larger than this are left alone.
pub const MAX_INLINE_OPS: usize = 64;

/// Inlines calls to small single-block callees that make no calls of their
/// own; repeating that bottom-up inlines any acyclic call tree, and
/// recursion is never touched. Callees that had callers before and have
/// none afterwards are deleted (`main` and never-called functions stay).
pub fn run_inline(module: &Module) -> (Module, PassReport) {
    let before = module_op_count(&module.functions);
    let called_before = callees(module);
    let mut out = module.clone();
    let mut inlined = 0;
    for _ in 0..=module.functions.len() {
        let candidates: HashMap<String, Function> = out
            .functions
            .iter()
            .filter(|f| inlinable(f))
            .map(|f| (f.name.clone(), f.clone()))
            .collect();
        if candidates.is_empty() {
            break;
        }
        let mut round = 0;
        for f in &mut out.functions {
            let mut ids = f.value_allocator();
            let mut subst = HashMap::new();
            round += inline_region(&mut f.body, &candidates, &mut ids, &mut subst);
            substitute_region(&mut f.body, &subst);
        }
        inlined += round;
        if round == 0 {
            break;
        }
    }
    let mut notes = Vec::new();
    if out.main().is_some() {
        let called_after = callees(&out);
        let dead: Vec<String> = called_before
            .difference(&called_after)
            .filter(|n| n.as_str() != "main")
            .cloned()
            .collect();
        out.functions.retain(|f| !dead.contains(&f.name));
        if !dead.is_empty() {
            notes.push(format!("removed fully inlined function(s): {}", dead.join(", ")));
        }
    }
    let mut report = PassReport::new("inline", before, module_op_count(&out.functions), inlined);
    report.notes = notes;
    (out, report)
}

fn callees(module: &Module) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    for f in &module.functions {
        f.body.walk(&mut |op| {
            if let OpKind::Call(n) = &op.kind {
                s.insert(n.clone());
            }
        });
    }
    s
}

fn inlinable(f: &Function) -> bool {
    if !f.is_single_block() || f.body.op_count() > MAX_INLINE_OPS {
        return false;
    }
    let mut leaf = true;
    f.body.walk(&mut |op| leaf &= !matches!(op.kind, OpKind::Call(_)));
    let ends_in_return = f.body.blocks[0].ops.last().is_some_and(|o| o.kind == OpKind::Return);
    leaf && ends_in_return
}

fn inline_region(
    region: &mut Region,
    candidates: &HashMap<String, Function>,
    ids: &mut ValueAllocator,
    subst: &mut HashMap<ValueId, ValueId>,
) -> usize {
    let mut n = 0;
    for block in &mut region.blocks {
        let mut out: Vec<Operation> = Vec::with_capacity(block.ops.len());
        for mut op in std::mem::take(&mut block.ops) {
            for r in &mut op.regions {
                n += inline_region(r, candidates, ids, subst);
            }
            let callee = match &op.kind {
                OpKind::Call(name) => candidates.get(name),
                _ => None,
            };
            let Some(callee) = callee else {
                out.push(op);
                continue;
            };
            let entry = &callee.body.blocks[0];
            let mut map: HashMap<ValueId, ValueId> =
                entry.args.iter().map(|a| a.id).zip(op.operands.iter().copied()).collect();
            let (body, ret) = entry.ops.split_at(entry.ops.len() - 1);
            out.extend(clone_ops_fresh(body, &mut map, ids));
            for (r, v) in op.result_ids().zip(&ret[0].operands) {
                subst.insert(r, map.get(v).copied().unwrap_or(*v));
            }
            n += 1;
        }
        block.ops = out;
    }
    n
}

use std::collections::HashMap;

use crate::ir::{Block, Function, Operation, Region, ValueAllocator, ValueId};

/// Number of uses of every value in `region` (operands and branch
/// arguments, nested regions included).
pub(crate) fn use_counts(region: &Region) -> HashMap<ValueId, usize> {
    let mut m = HashMap::new();
    region.walk(&mut |op| {
        for v in op.all_uses() {
            *m.entry(v).or_insert(0) += 1;
        }
    });
    m
}

/// Rewrites every use in `region` through `subst` (applied transitively).
pub(crate) fn substitute_region(region: &mut Region, subst: &HashMap<ValueId, ValueId>) {
    if subst.is_empty() {
        return;
    }
    region.walk_mut(&mut |op| op.for_each_use_mut(|v| *v = resolve(subst, *v)));
}

pub(crate) fn substitute_op(op: &mut Operation, subst: &HashMap<ValueId, ValueId>) {
    if subst.is_empty() {
        return;
    }
    op.for_each_use_mut(|v| *v = resolve(subst, *v));
    for r in &mut op.regions {
        substitute_region(r, subst);
    }
}

pub(crate) fn resolve(subst: &HashMap<ValueId, ValueId>, mut v: ValueId) -> ValueId {
    while let Some(&n) = subst.get(&v) {
        if n == v {
            break;
        }
        v = n;
    }
    v
}

/// Clones `block`'s operations with every definition renamed to a fresh
/// id; `map` seeds the renaming (e.g. block arguments) and receives the
/// new names. Uses of values outside the block pass through `map` when
/// present and are left alone otherwise.
pub(crate) fn clone_ops_fresh(
    ops: &[Operation],
    map: &mut HashMap<ValueId, ValueId>,
    ids: &mut ValueAllocator,
) -> Vec<Operation> {
    ops.iter().map(|op| clone_op_fresh(op, map, ids)).collect()
}

fn clone_op_fresh(op: &Operation, map: &mut HashMap<ValueId, ValueId>, ids: &mut ValueAllocator) -> Operation {
    let mut new = op.clone();
    new.for_each_use_mut(|v| {
        if let Some(n) = map.get(v) {
            *v = *n;
        }
    });
    new.regions = op.regions.iter().map(|r| clone_region_fresh(r, map, ids)).collect();
    for r in &mut new.results {
        let fresh = ids.fresh();
        map.insert(r.id, fresh);
        r.id = fresh;
    }
    new
}

fn clone_region_fresh(region: &Region, map: &mut HashMap<ValueId, ValueId>, ids: &mut ValueAllocator) -> Region {
    Region::new(
        region
            .blocks
            .iter()
            .map(|b| {
                let args = b
                    .args
                    .iter()
                    .map(|a| {
                        let fresh = ids.fresh();
                        map.insert(a.id, fresh);
                        crate::ir::Value::new(fresh, a.ty)
                    })
                    .collect();
                Block::new(args, clone_ops_fresh(&b.ops, map, ids))
            })
            .collect(),
    )
}

pub(crate) fn module_op_count(functions: &[Function]) -> usize {
    functions.iter().map(|f| f.body.op_count()).sum()
}

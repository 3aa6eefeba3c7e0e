use std::collections::HashMap;

use super::util::{module_op_count, use_counts};
use super::PassReport;
use crate::ir::{Effect, Module, OpKind, Operation, Region, ValueId};

/// Removes operations whose results are never used and whose removal
/// cannot be observed. Measurements and resets are only removed when
/// `aggressive` is set; memory stores, bit-memory allocation and calls are
/// always kept.
pub fn run_dce(module: &Module, aggressive: bool) -> (Module, PassReport) {
    let before = module_op_count(&module.functions);
    let mut out = module.clone();
    let mut removed = 0;
    for f in &mut out.functions {
        let mut uses = use_counts(&f.body);
        loop {
            let n = sweep(&mut f.body, &mut uses, aggressive);
            removed += n;
            if n == 0 {
                break;
            }
        }
    }
    let after = module_op_count(&out.functions);
    (out, PassReport::new("dce", before, after, removed))
}

fn sweep(region: &mut Region, uses: &mut HashMap<ValueId, usize>, aggressive: bool) -> usize {
    let mut removed = 0;
    for block in &mut region.blocks {
        let mut keep = vec![true; block.ops.len()];
        for i in (0..block.ops.len()).rev() {
            let op = &mut block.ops[i];
            for r in &mut op.regions {
                removed += sweep(r, uses, aggressive);
            }
            let dead = op.result_ids().all(|v| uses.get(&v).copied().unwrap_or(0) == 0);
            if dead && removable(op, aggressive) {
                keep[i] = false;
                removed += 1;
                release(op, uses);
            }
        }
        let mut it = keep.into_iter();
        block.ops.retain(|_| it.next().unwrap_or(true));
    }
    removed
}

fn release(op: &Operation, uses: &mut HashMap<ValueId, usize>) {
    let mut dec = |v: ValueId| {
        if let Some(c) = uses.get_mut(&v) {
            *c = c.saturating_sub(1);
        }
    };
    op.all_uses().for_each(&mut dec);
    for r in &op.regions {
        r.walk(&mut |o| o.all_uses().for_each(&mut dec));
    }
}

fn removable(op: &Operation, aggressive: bool) -> bool {
    match (&op.kind, op.kind.effect()) {
        (k, _) if k.is_terminator() => false,
        (OpKind::Call(_), _) | (OpKind::MemAllocBit, _) | (OpKind::MemStoreBit, _) => false,
        (OpKind::ScfIf | OpKind::ScfFor, _) => op.regions.iter().all(region_is_pure),
        (OpKind::Measure | OpKind::Reset, _) => aggressive,
        (_, Effect::Pure | Effect::Fence | Effect::Resource | Effect::Memory) => true,
        (_, Effect::Observable) => aggressive,
    }
}

/// A region whose execution has no effect beyond its yielded values.
fn region_is_pure(region: &Region) -> bool {
    let mut pure = true;
    region.walk(&mut |op| {
        pure &= matches!(op.kind.effect(), Effect::Pure | Effect::Fence) && !matches!(op.kind, OpKind::Call(_));
    });
    pure
}

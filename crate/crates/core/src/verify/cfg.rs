use std::collections::BTreeMap;

use super::{Diagnostic, VerifyError};
use crate::ir::{Function, OpLoc, ValueId};

/// Single-use verification for a flat acyclic CFG.
///
/// For each qubit, blocks are visited in reverse topological order and a
/// block is *marked* when it, or anything reachable from it, uses the
/// qubit. A block with its own use whose successor is already marked has a
/// path to a second use. Total cost is O(qubits × (blocks + edges)).
pub fn verify_single_use_cfg(func: &Function) -> Result<Vec<Diagnostic>, VerifyError> {
    let blocks = &func.body.blocks;
    let n = blocks.len();
    let malformed = |reason: &str| VerifyError::MalformedRegion {
        func: func.name.clone(),
        reason: reason.into(),
    };
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (bi, b) in blocks.iter().enumerate() {
        for op in &b.ops {
            if !op.regions.is_empty() {
                return Err(malformed("nested regions in a flat CFG"));
            }
            for s in &op.successors {
                if s.block >= n {
                    return Err(malformed(&format!("branch to missing block {}", s.block)));
                }
                if !succs[bi].contains(&s.block) {
                    succs[bi].push(s.block);
                }
            }
        }
    }
    let order = topo_order(&succs).ok_or_else(|| VerifyError::CyclicCFG { func: func.name.clone() })?;

    // Uses of each qubit, grouped by block, in program order.
    let types = func.value_types();
    let mut uses: BTreeMap<ValueId, Vec<(usize, OpLoc)>> = BTreeMap::new();
    let mut defs: BTreeMap<ValueId, Option<OpLoc>> = BTreeMap::new();
    let root = OpLoc::new(func.name.clone());
    for (bi, b) in blocks.iter().enumerate() {
        for a in &b.args {
            if a.ty.is_qubit() {
                defs.insert(a.id, None);
            }
        }
        for (oi, op) in b.ops.iter().enumerate() {
            let loc = root.child(0, bi, oi);
            for v in op.all_uses() {
                if types.get(&v).is_some_and(|t| t.is_qubit()) {
                    uses.entry(v).or_default().push((bi, loc.clone()));
                }
            }
            for r in &op.results {
                if r.ty.is_qubit() {
                    defs.insert(r.id, Some(loc.clone()));
                }
            }
        }
    }

    let mut diags = Vec::new();
    let mut mark: Vec<Option<OpLoc>> = vec![None; n];
    let mut own: Vec<Option<OpLoc>> = vec![None; n];
    for (&v, sites) in &uses {
        mark.iter_mut().for_each(|m| *m = None);
        own.iter_mut().for_each(|m| *m = None);
        for (bi, loc) in sites {
            match &own[*bi] {
                Some(first) => diags.push(Diagnostic::double_use(v, first.clone(), loc.clone())),
                None => own[*bi] = Some(loc.clone()),
            }
        }
        for &b in order.iter().rev() {
            let below = succs[b].iter().find_map(|s| mark[*s].clone());
            mark[b] = match (&own[b], below) {
                (Some(first), Some(second)) => {
                    diags.push(Diagnostic::double_use(v, first.clone(), second));
                    Some(first.clone())
                }
                (Some(first), None) => Some(first.clone()),
                (None, below) => below,
            };
        }
    }
    for (v, site) in defs {
        if !uses.contains_key(&v) {
            diags.push(Diagnostic::leak(v, site));
        }
    }
    Ok(diags)
}

/// Kahn's algorithm; `None` when the graph has a cycle.
fn topo_order(succs: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = succs.len();
    let mut indeg = vec![0usize; n];
    for s in succs.iter().flatten() {
        indeg[*s] += 1;
    }
    let mut stack: Vec<usize> = (0..n).rev().filter(|b| indeg[*b] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(b) = stack.pop() {
        order.push(b);
        for &s in succs[b].iter().rev() {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                stack.push(s);
            }
        }
    }
    (order.len() == n).then_some(order)
}

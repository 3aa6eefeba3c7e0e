//! Declarative peephole rewriting.
//!
//! A [`RewritePattern`] is data: a small matcher DAG over the def-use graph
//! and a replacement. Node 0 is the *root*, the last operation of the
//! matched sub-circuit; other nodes are reached through the root's operands
//! (`Src::Result { node, slot }` says "this operand is result `slot` of the
//! op bound to `node`"). A generic driver sweeps every block in program
//! order, tries the patterns at each operation by decreasing benefit, and
//! repeats until nothing matches.
//!
//! Matching never crosses a block boundary, and a non-root node only
//! matches when the pattern itself accounts for every use of its results,
//! so a rewrite can never duplicate or drop a qubit use. `qssa.barrier` is
//! not matched by any pattern and therefore fences every rewrite.

use std::collections::{BTreeMap, HashMap};

use super::util::{module_op_count, resolve, substitute_op, substitute_region, use_counts};
use super::PassReport;
use crate::ir::{Attr, Attrs, Block, Function, Module, OpKind, Operation, Region, ValueId};
use crate::linalg::{angles_equal, equal_up_to_phase, zyz_angles, CMatrix};

/// Where an operand of a pattern node comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Src {
    Any,
    Result { node: usize, slot: usize },
}

/// Extra conditions on a node beyond its kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Guard {
    None,
    /// All angles are attributes.
    StaticAngles,
    /// Diagonal in the computational basis.
    Diagonal,
    /// Static single-qubit gate equal to the identity up to phase.
    Identity,
}

#[derive(Clone, Debug)]
pub struct NodeSpec {
    pub kinds: Vec<OpKind>,
    /// Matched against a prefix of the operands (trailing angle operands
    /// are unconstrained).
    pub operands: Vec<Src>,
    pub guard: Guard,
}

/// Operand `operand` of the op bound to `node`.
pub type Wire = (usize, usize);

#[derive(Clone, Debug)]
pub enum Replacement {
    /// The root's results become these wires; every matched op is erased.
    Wires(Vec<Wire>),
    /// The root is kept with its leading operands replaced by these wires;
    /// the other matched ops are erased.
    RebuildRoot(Vec<Wire>),
    /// Computed replacement; `None` declines the match.
    Native(fn(&[&Operation]) -> Option<NativeRewrite>),
}

#[derive(Clone, Debug)]
pub enum NativeRewrite {
    Wires(Vec<Wire>),
    /// A single new op that takes over the root's result values.
    Op { kind: OpKind, attrs: Attrs, operands: Vec<Wire> },
}

#[derive(Clone, Debug)]
pub struct RewritePattern {
    pub name: &'static str,
    pub benefit: u32,
    pub nodes: Vec<NodeSpec>,
    pub replacement: Replacement,
}

fn node(kinds: &[OpKind], operands: &[Src], guard: Guard) -> NodeSpec {
    NodeSpec {
        kinds: kinds.to_vec(),
        operands: operands.to_vec(),
        guard,
    }
}

const fn res(node: usize, slot: usize) -> Src {
    Src::Result { node, slot }
}

/// Kinds that U-merge folds together.
pub const U_FAMILY: [OpKind; 8] = [
    OpKind::U,
    OpKind::Rx,
    OpKind::Ry,
    OpKind::Rz,
    OpKind::S,
    OpKind::Sdg,
    OpKind::T,
    OpKind::Tdg,
];

/// Single-qubit kinds that may be diagonal.
pub const DIAGONAL_KINDS: [OpKind; 7] = [OpKind::Rz, OpKind::Z, OpKind::S, OpKind::Sdg, OpKind::T, OpKind::Tdg, OpKind::U];

/// The pattern table, highest benefit first.
pub fn default_patterns() -> Vec<RewritePattern> {
    use OpKind::*;
    let mut v = vec![RewritePattern {
        name: "cnot-cnot",
        benefit: 10,
        nodes: vec![
            node(&[CNOT], &[res(1, 0), res(1, 1)], Guard::None),
            node(&[CNOT], &[Src::Any, Src::Any], Guard::None),
        ],
        replacement: Replacement::Wires(vec![(1, 0), (1, 1)]),
    }];
    for (name, k) in [("x-x", X), ("y-y", Y), ("z-z", Z), ("h-h", H)] {
        v.push(RewritePattern {
            name,
            benefit: 10,
            nodes: vec![
                node(std::slice::from_ref(&k), &[res(1, 0)], Guard::None),
                node(&[k], &[Src::Any], Guard::None),
            ],
            replacement: Replacement::Wires(vec![(1, 0)]),
        });
    }
    let paulis = [X, Y, Z];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                if a == b || b == c || a == c {
                    continue;
                }
                v.push(RewritePattern {
                    name: "pauli-triple",
                    benefit: 9,
                    nodes: vec![
                        node(&[paulis[c].clone()], &[res(1, 0)], Guard::None),
                        node(&[paulis[b].clone()], &[res(2, 0)], Guard::None),
                        node(&[paulis[a].clone()], &[Src::Any], Guard::None),
                    ],
                    replacement: Replacement::Wires(vec![(2, 0)]),
                });
            }
        }
    }
    v.push(RewritePattern {
        name: "identity-u",
        benefit: 6,
        nodes: vec![node(&U_FAMILY, &[Src::Any], Guard::Identity)],
        replacement: Replacement::Wires(vec![(0, 0)]),
    });
    v.push(RewritePattern {
        name: "u-merge",
        benefit: 5,
        nodes: vec![
            node(&U_FAMILY, &[res(1, 0)], Guard::StaticAngles),
            node(&U_FAMILY, &[Src::Any], Guard::StaticAngles),
        ],
        replacement: Replacement::Native(merge_u),
    });
    v.push(RewritePattern {
        name: "drop-phase-before-measure",
        benefit: 4,
        nodes: vec![
            node(&[Measure], &[res(1, 0)], Guard::None),
            node(&DIAGONAL_KINDS, &[Src::Any], Guard::Diagonal),
        ],
        replacement: Replacement::RebuildRoot(vec![(1, 0)]),
    });
    v.sort_by_key(|p| std::cmp::Reverse(p.benefit));
    v
}

/// Tolerance for deciding that a merged gate is the identity.
const IDENTITY_TOL: f64 = 1e-12;

fn merge_u(ops: &[&Operation]) -> Option<NativeRewrite> {
    let later = ops[0].gate_matrix()?;
    let earlier = ops[1].gate_matrix()?;
    let product = &later * &earlier;
    if equal_up_to_phase(&product, &CMatrix::identity(2), IDENTITY_TOL) {
        return Some(NativeRewrite::Wires(vec![(1, 0)]));
    }
    let (theta, phi, lambda) = zyz_angles(&product);
    let attrs: Attrs = [("theta", theta), ("phi", phi), ("lambda", lambda)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), Attr::Float(v)))
        .collect();
    Some(NativeRewrite::Op {
        kind: OpKind::U,
        attrs,
        operands: vec![(1, 0)],
    })
}

fn guard_holds(g: Guard, op: &Operation) -> bool {
    match g {
        Guard::None => true,
        Guard::StaticAngles => op.static_angles().is_some(),
        Guard::Diagonal => match op.kind {
            OpKind::U => op.attr_float("theta").is_some_and(|t| angles_equal(t, 0.0)),
            // Rz is diagonal whatever its angle, static or not.
            _ => DIAGONAL_KINDS.contains(&op.kind),
        },
        Guard::Identity => op
            .gate_matrix()
            .is_some_and(|m| m.dim() == 2 && equal_up_to_phase(&m, &CMatrix::identity(2), IDENTITY_TOL)),
    }
}

/// Runs the default pattern table to a fixpoint.
pub fn run_peepholes(module: &Module) -> (Module, PassReport) {
    run_patterns(module, &default_patterns())
}

pub fn run_patterns(module: &Module, patterns: &[RewritePattern]) -> (Module, PassReport) {
    let before = module_op_count(&module.functions);
    let cap = before.saturating_mul(100).max(100);
    let mut out = module.clone();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    for f in &mut out.functions {
        total += rewrite_function(f, patterns, cap, &mut counts);
    }
    let mut report = PassReport::new("peephole", before, module_op_count(&out.functions), total);
    if let Some(n) = counts.get("pauli-triple") {
        report.notes.push(format!("discarded the global phase of {n} Pauli triple(s)"));
    }
    report.patterns = counts;
    (out, report)
}

fn rewrite_function(f: &mut Function, patterns: &[RewritePattern], cap: usize, counts: &mut BTreeMap<String, usize>) -> usize {
    let mut subst = HashMap::new();
    let mut total = 0;
    loop {
        let mut uses = use_counts(&f.body);
        let mut d = Driver {
            patterns,
            uses: &mut uses,
            subst: &mut subst,
            counts,
            rewrites: 0,
            budget: cap.saturating_sub(total),
        };
        d.region(&mut f.body);
        let n = d.rewrites;
        total += n;
        substitute_region(&mut f.body, &subst);
        if n == 0 || total >= cap {
            return total;
        }
    }
}

struct Driver<'a> {
    patterns: &'a [RewritePattern],
    uses: &'a mut HashMap<ValueId, usize>,
    subst: &'a mut HashMap<ValueId, ValueId>,
    counts: &'a mut BTreeMap<String, usize>,
    rewrites: usize,
    budget: usize,
}

impl Driver<'_> {
    fn region(&mut self, r: &mut Region) {
        for b in &mut r.blocks {
            self.block(b);
        }
    }

    fn block(&mut self, block: &mut Block) {
        let mut ops: Vec<Option<Operation>> = std::mem::take(&mut block.ops).into_iter().map(Some).collect();
        // value -> (op index, result slot) for live ops of this block
        let mut defs: HashMap<ValueId, (usize, usize)> = HashMap::new();
        for i in 0..ops.len() {
            {
                let op = ops[i].as_mut().expect("ops at or after the cursor are live");
                substitute_op(op, self.subst);
                for r in &mut op.regions {
                    self.region(r);
                }
            }
            if self.rewrites < self.budget {
                self.try_patterns(&mut ops, i, &defs);
            }
            if let Some(op) = &ops[i] {
                for (slot, r) in op.results.iter().enumerate() {
                    defs.insert(r.id, (i, slot));
                }
            }
        }
        block.ops = ops.into_iter().flatten().collect();
    }

    fn try_patterns(&mut self, ops: &mut [Option<Operation>], root: usize, defs: &HashMap<ValueId, (usize, usize)>) {
        for p in self.patterns {
            let Some(bound) = self.match_pattern(p, ops, root, defs) else {
                continue;
            };
            if self.apply(p, ops, &bound) {
                self.rewrites += 1;
                *self.counts.entry(p.name.to_string()).or_insert(0) += 1;
                return;
            }
        }
    }

    fn match_pattern(
        &self,
        p: &RewritePattern,
        ops: &[Option<Operation>],
        root: usize,
        defs: &HashMap<ValueId, (usize, usize)>,
    ) -> Option<Vec<usize>> {
        let mut bound: Vec<Option<usize>> = vec![None; p.nodes.len()];
        bound[0] = Some(root);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let idx = bound[n]?;
            let op = ops[idx].as_ref()?;
            let spec = &p.nodes[n];
            if !spec.kinds.contains(&op.kind) || op.operands.len() < spec.operands.len() || !guard_holds(spec.guard, op) {
                return None;
            }
            for (j, src) in spec.operands.iter().enumerate() {
                let Src::Result { node: m, slot } = *src else { continue };
                let &(def_idx, def_slot) = defs.get(&op.operands[j])?;
                if def_slot != slot || ops[def_idx].is_none() {
                    return None;
                }
                match bound[m] {
                    Some(b) if b != def_idx => return None,
                    Some(_) => {}
                    None => {
                        if bound.contains(&Some(def_idx)) {
                            return None;
                        }
                        bound[m] = Some(def_idx);
                        stack.push(m);
                    }
                }
            }
        }
        let bound: Vec<usize> = bound.into_iter().collect::<Option<_>>()?;
        // Every result of an inner node must be consumed inside the match.
        let mut internal: HashMap<ValueId, usize> = HashMap::new();
        for &i in &bound {
            for v in &ops[i].as_ref()?.operands {
                *internal.entry(*v).or_insert(0) += 1;
            }
        }
        for &i in &bound[1..] {
            for r in &ops[i].as_ref()?.results {
                let total = self.uses.get(&r.id).copied().unwrap_or(0);
                if total != internal.get(&r.id).copied().unwrap_or(0) {
                    return None;
                }
            }
        }
        Some(bound)
    }

    fn wire(ops: &[Option<Operation>], bound: &[usize], (n, j): Wire) -> ValueId {
        ops[bound[n]].as_ref().expect("bound ops are live").operands[j]
    }

    fn erase(&mut self, ops: &mut [Option<Operation>], idx: usize) {
        if let Some(op) = ops[idx].take() {
            for v in op.all_uses() {
                if let Some(c) = self.uses.get_mut(&v) {
                    *c = c.saturating_sub(1);
                }
            }
        }
    }

    fn forward(&mut self, from: ValueId, to: ValueId) {
        let to = resolve(self.subst, to);
        let n = self.uses.remove(&from).unwrap_or(0);
        *self.uses.entry(to).or_insert(0) += n;
        self.subst.insert(from, to);
    }

    fn apply(&mut self, p: &RewritePattern, ops: &mut [Option<Operation>], bound: &[usize]) -> bool {
        let native;
        let rewrite = match &p.replacement {
            Replacement::Native(f) => {
                let matched: Vec<&Operation> = bound.iter().map(|&i| ops[i].as_ref().expect("live")).collect();
                match f(&matched) {
                    Some(r) => {
                        native = r;
                        Some(&native)
                    }
                    None => return false,
                }
            }
            _ => None,
        };
        let root = bound[0];
        match (&p.replacement, rewrite) {
            (Replacement::Wires(ws), _) | (_, Some(NativeRewrite::Wires(ws))) => {
                let targets: Vec<ValueId> = ws.iter().map(|w| Self::wire(ops, bound, *w)).collect();
                let results: Vec<ValueId> = ops[root].as_ref().expect("live").result_ids().collect();
                for &i in bound {
                    self.erase(ops, i);
                }
                for (r, t) in results.into_iter().zip(targets) {
                    self.forward(r, t);
                }
            }
            (Replacement::RebuildRoot(ws), _) => {
                let targets: Vec<ValueId> = ws.iter().map(|w| Self::wire(ops, bound, *w)).collect();
                for &i in &bound[1..] {
                    self.erase(ops, i);
                }
                let op = ops[root].as_mut().expect("live");
                for (j, t) in targets.into_iter().enumerate() {
                    if let Some(c) = self.uses.get_mut(&op.operands[j]) {
                        *c = c.saturating_sub(1);
                    }
                    op.operands[j] = t;
                    *self.uses.entry(t).or_insert(0) += 1;
                }
            }
            (_, Some(NativeRewrite::Op { kind, attrs, operands })) => {
                let operands: Vec<ValueId> = operands.iter().map(|w| Self::wire(ops, bound, *w)).collect();
                let results = ops[root].as_ref().expect("live").results.clone();
                for &i in bound {
                    self.erase(ops, i);
                }
                for v in &operands {
                    *self.uses.entry(*v).or_insert(0) += 1;
                }
                let mut op = Operation::new(kind.clone(), operands, results);
                op.attrs = attrs.clone();
                ops[root] = Some(op);
            }
            (Replacement::Native(_), None) => unreachable!("native rewrites always produce a value"),
        }
        true
    }
}

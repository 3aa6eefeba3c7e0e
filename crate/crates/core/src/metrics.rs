//! Circuit metrics: gate count, depth and per-kind histogram.
//!
//! Counting convention: every gate, `measure` and `reset` counts as one
//! operation, whatever its width; plumbing (`split`, `concat`, `cast`,
//! `dim`, `barrier`) and classical operations count as zero. Depth is the
//! longest path through the wires: a gate synchronises all of its wires and
//! adds one layer, while a measurement or reset of `qubit<n>` adds one layer
//! to each of its `n` wires independently. An `scf.if` contributes the
//! deeper of its two branches (wire by wire) and an `scf.for` with constant
//! bounds contributes its body once per iteration.
//!
//! QASM programs are measured statement by statement under the same
//! convention, with gate names mapped onto the IR kinds so that a module
//! and its lowering report identical histograms.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::ir::{Module, OpKind, Operation, Region, Size, Type, ValueId};
use crate::qasm::{QasmProgram, QasmStmt, RegRef};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CircuitMetrics {
    pub gate_count: usize,
    pub depth: usize,
    pub histogram: BTreeMap<String, usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("loop without a constant trip count of at most 65536 has no static gate count")]
    Unbounded,
    #[error("recursive call to @{0} has no static gate count")]
    Recursive(String),
    #[error("module has no `main` function")]
    NoMain,
}

/// `1 - after/before`, or 0 when `before` is empty.
pub fn optimization_ratio(before: &CircuitMetrics, after: &CircuitMetrics) -> f64 {
    ratio(before.gate_count, after.gate_count)
}

pub fn ratio(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        1.0 - after as f64 / before as f64
    }
}

/// Histogram key of an IR operation kind.
pub fn kind_label(kind: &OpKind) -> String {
    match kind {
        OpKind::Call(f) => format!("call @{f}"),
        k => k.name().trim_start_matches("qssa.").to_string(),
    }
}

/// Metrics of `main`, with calls expanded.
pub fn compute_metrics(module: &Module) -> Result<CircuitMetrics, MetricsError> {
    let main = module.main().ok_or(MetricsError::NoMain)?;
    let mut w = Walker {
        module,
        stack: vec![main.name.clone()],
        ints: HashMap::new(),
    };
    let mut m = CircuitMetrics::default();
    let mut depths: HashMap<ValueId, Vec<usize>> = HashMap::new();
    for b in &main.body.blocks {
        for a in &b.args {
            depths.insert(a.id, vec![0; width(a.ty)]);
        }
    }
    let mut deepest = 0;
    w.region(&main.body, &mut depths, &mut m, &mut deepest)?;
    m.depth = deepest;
    Ok(m)
}

fn width(ty: Type) -> usize {
    match ty {
        Type::Qubit(Size::Static(n)) => n as usize,
        // Unknown widths are tracked as a single wire.
        Type::Qubit(Size::Dynamic) => 1,
        _ => 0,
    }
}

struct Walker<'a> {
    module: &'a Module,
    stack: Vec<String>,
    ints: HashMap<ValueId, i64>,
}

type Depths = HashMap<ValueId, Vec<usize>>;

impl Walker<'_> {
    fn region(
        &mut self,
        region: &Region,
        depths: &mut Depths,
        m: &mut CircuitMetrics,
        deepest: &mut usize,
    ) -> Result<Vec<Vec<usize>>, MetricsError> {
        let mut yielded = Vec::new();
        for b in &region.blocks {
            for op in &b.ops {
                if matches!(op.kind, OpKind::Yield | OpKind::Return) {
                    yielded = op.operands.iter().map(|v| depths.get(v).cloned().unwrap_or_default()).collect();
                    continue;
                }
                self.op(op, depths, m, deepest)?;
            }
        }
        Ok(yielded)
    }

    fn op(&mut self, op: &Operation, depths: &mut Depths, m: &mut CircuitMetrics, deepest: &mut usize) -> Result<(), MetricsError> {
        let input: Vec<usize> = op.operands.iter().filter_map(|v| depths.get(v)).flatten().copied().collect();
        let assign = |depths: &mut Depths, wires: Vec<usize>| {
            let mut at = 0;
            for r in &op.results {
                let n = width(r.ty);
                if r.ty.is_qubit() {
                    let mut slice: Vec<usize> = wires.get(at..at + n).map(<[usize]>::to_vec).unwrap_or_default();
                    slice.resize(n, wires.iter().copied().max().unwrap_or(0));
                    depths.insert(r.id, slice);
                }
                at += n;
            }
        };
        match &op.kind {
            OpKind::ConstInt => {
                if let Some(v) = op.attr_int("value") {
                    self.ints.insert(op.results[0].id, v);
                }
            }
            OpKind::Alloc => assign(depths, vec![0; width(op.results[0].ty)]),
            OpKind::Measure | OpKind::Reset => {
                count(m, &op.kind, 1);
                let out: Vec<usize> = input.iter().map(|d| d + 1).collect();
                *deepest = (*deepest).max(out.iter().copied().max().unwrap_or(0));
                for r in &op.results {
                    if r.ty.is_qubit() {
                        depths.insert(r.id, out.clone());
                    }
                }
            }
            k if k.is_gate() => {
                count(m, k, 1);
                let d = input.iter().copied().max().unwrap_or(0) + 1;
                *deepest = (*deepest).max(d);
                assign(depths, vec![d; input.len()]);
            }
            OpKind::ScfIf => {
                let mut branch_results = Vec::new();
                let mut counts = Vec::new();
                for r in &op.regions {
                    let mut sub = CircuitMetrics::default();
                    let mut d = depths.clone();
                    branch_results.push(self.region(r, &mut d, &mut sub, deepest)?);
                    counts.push(sub);
                }
                // Both arms are counted: they are distinct instructions.
                for sub in counts {
                    merge(m, &sub, 1);
                }
                for (j, r) in op.results.iter().enumerate() {
                    let mut w: Vec<usize> = Vec::new();
                    for br in &branch_results {
                        let y = br.get(j).cloned().unwrap_or_default();
                        if w.len() < y.len() {
                            w.resize(y.len(), 0);
                        }
                        for (a, b) in w.iter_mut().zip(y) {
                            *a = (*a).max(b);
                        }
                    }
                    if r.ty.is_qubit() {
                        w.resize(width(r.ty), 0);
                        depths.insert(r.id, w);
                    }
                }
            }
            OpKind::ScfFor => {
                let c = |i: usize| self.ints.get(&op.operands[i]).copied();
                let (Some(lb), Some(ub), Some(step)) = (c(0), c(1), c(2)) else {
                    return Err(MetricsError::Unbounded);
                };
                if step <= 0 {
                    return Err(MetricsError::Unbounded);
                }
                let trip = if ub <= lb { 0 } else { ((i128::from(ub) - i128::from(lb) - 1) / i128::from(step) + 1) as usize };
                if trip > 1 << 16 {
                    return Err(MetricsError::Unbounded);
                }
                let body = &op.regions[0];
                let mut carried: Vec<Vec<usize>> = op.operands[3..].iter().map(|v| depths.get(v).cloned().unwrap_or_default()).collect();
                for k in 0..trip {
                    let mut d = depths.clone();
                    if let Some(b) = body.blocks.first() {
                        if let Some(iv) = b.args.first() {
                            self.ints.insert(iv.id, lb + k as i64 * step);
                        }
                        for (a, c) in b.args.iter().skip(1).zip(&carried) {
                            d.insert(a.id, c.clone());
                        }
                    }
                    let mut once = CircuitMetrics::default();
                    carried = self.region(body, &mut d, &mut once, deepest)?;
                    merge(m, &once, 1);
                }
                for (r, c) in op.results.iter().zip(carried) {
                    if r.ty.is_qubit() {
                        depths.insert(r.id, c);
                    }
                }
            }
            OpKind::Call(name) => {
                if self.stack.contains(name) {
                    return Err(MetricsError::Recursive(name.clone()));
                }
                let Some(f) = self.module.function(name) else {
                    return Ok(());
                };
                self.stack.push(name.clone());
                let mut d: Depths = HashMap::new();
                if let Some(b) = f.body.blocks.first() {
                    for (a, v) in b.args.iter().zip(&op.operands) {
                        if let Some(x) = depths.get(v) {
                            d.insert(a.id, x.clone());
                        }
                    }
                }
                let mut sub = CircuitMetrics::default();
                let out = self.region(&f.body, &mut d, &mut sub, deepest)?;
                self.stack.pop();
                merge(m, &sub, 1);
                for (r, o) in op.results.iter().zip(out) {
                    if r.ty.is_qubit() {
                        depths.insert(r.id, o);
                    }
                }
            }
            _ => assign(depths, input),
        }
        Ok(())
    }
}

fn count(m: &mut CircuitMetrics, kind: &OpKind, n: usize) {
    m.gate_count += n;
    *m.histogram.entry(kind_label(kind)).or_insert(0) += n;
}

fn merge(m: &mut CircuitMetrics, sub: &CircuitMetrics, times: usize) {
    m.gate_count += sub.gate_count * times;
    for (k, v) in &sub.histogram {
        *m.histogram.entry(k.clone()).or_insert(0) += v * times;
    }
}

/// Maps a QASM gate name onto the IR histogram label where one exists.
fn qasm_label(name: &str) -> String {
    match name {
        "cx" | "CX" => "CNOT",
        "x" => "X",
        "y" => "Y",
        "z" => "Z",
        "h" => "H",
        "s" => "S",
        "sdg" => "Sdg",
        "t" => "T",
        "tdg" => "Tdg",
        "rx" => "Rx",
        "ry" => "Ry",
        "rz" => "Rz",
        "u3" | "U" | "u" => "U",
        other => return other.to_string(),
    }
    .to_string()
}

/// Metrics of a QASM program; each statement counts once.
pub fn compute_qasm_metrics(prog: &QasmProgram) -> CircuitMetrics {
    let mut m = CircuitMetrics::default();
    let mut depth: HashMap<RegRef, usize> = HashMap::new();
    let mut deepest = 0;
    let mut layer = |m: &mut CircuitMetrics, label: String, qubits: &[RegRef], sync: bool| {
        m.gate_count += 1;
        *m.histogram.entry(label).or_insert(0) += 1;
        let d = qubits.iter().map(|q| depth.get(q).copied().unwrap_or(0)).max().unwrap_or(0) + 1;
        for q in qubits {
            let e = depth.entry(q.clone()).or_insert(0);
            *e = if sync { d } else { *e + 1 };
            deepest = deepest.max(*e);
        }
        if qubits.is_empty() {
            deepest = deepest.max(d);
        }
    };
    fn visit(stmt: &QasmStmt, m: &mut CircuitMetrics, layer: &mut dyn FnMut(&mut CircuitMetrics, String, &[RegRef], bool)) {
        match stmt {
            QasmStmt::GateApply(g) => layer(m, qasm_label(&g.name), &g.qubits, true),
            QasmStmt::Measure { qubit, .. } => layer(m, "measure".into(), std::slice::from_ref(qubit), false),
            QasmStmt::Reset { qubit } => layer(m, "reset".into(), std::slice::from_ref(qubit), false),
            QasmStmt::If { body, .. } => visit(body, m, layer),
            _ => {}
        }
    }
    for s in &prog.statements {
        visit(s, &mut m, &mut layer);
    }
    m.depth = deepest;
    m
}

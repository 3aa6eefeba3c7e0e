//! OpenQASM → QSSA, in the style of mem2reg.
//!
//! Every physical qubit gets its own `qubit<1>` allocation, and a
//! *latest-qubit map* tracks the SSA value that currently holds it. Each
//! gate consumes the latest values of its wires and the map is updated
//! with the gate's results. Classical registers become `mem.alloc`
//! memories; a measurement is a `qssa.measure` followed by an explicit
//! `mem.store`.
//!
//! `if (c == n) op;` becomes loads of every bit of `c`, an integer
//! `Σ c[i]·2^i` compared against `n`, and an `scf.if` whose then-branch
//! applies `op` and yields the touched qubits while the else-branch yields
//! them unchanged.
//!
//! User gate definitions and the non-primitive library gates are inlined.
//! `main` returns the final value of every qubit, so raising never leaves
//! a qubit unconsumed.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use crate::ir::{
    build_op_scoped, Attr, Attrs, Block, CmpPredicate, Function, Module, OpKind, Operation, Region, Type, Value,
    ValueAllocator, ValueId,
};
use crate::qasm::{qelib, GateBodyStmt, QasmProgram, QasmStmt, RegRef};

/// Widest classical register an `if` comparison can assemble into an `i64`.
pub const MAX_IF_WIDTH: u32 = 62;

const MAX_EXPANSION_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RaiseError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Raises a parsed program into a module with a single `main`.
pub fn raise(prog: &QasmProgram) -> Result<Module, RaiseError> {
    let mut r = Raiser {
        prog,
        ids: ValueAllocator::starting_at(0),
        latest: HashMap::new(),
        order: Vec::new(),
        mems: HashMap::new(),
        types: HashMap::new(),
    };
    let mut ops = Vec::new();
    for stmt in &prog.statements {
        r.stmt(stmt, &mut ops)?;
    }
    let finals: Vec<Value> = r.order.iter().map(|q| r.latest[q]).collect();
    ops.push(r.build(OpKind::Return, &finals, &[], Attrs::new(), vec![])?);
    let outputs = finals.iter().map(|v| v.ty).collect();
    let main = Function::new("main", vec![], outputs, Region::single(Block::new(vec![], ops)));
    Ok(Module::new(vec![main]))
}

/// Expands one gate application into primitive ops on `qubits`, returning
/// the ops and the resulting wire values. Library gates with a native op
/// map directly (`u1(λ)` → `U(0,0,λ)`, `rz` → `Rz`, …); everything else is
/// inlined through its definition.
pub fn expand_stdlib_gate(
    prog: &QasmProgram,
    name: &str,
    params: &[f64],
    qubits: &[Value],
    ids: &mut ValueAllocator,
) -> Result<(Vec<Operation>, Vec<Value>), RaiseError> {
    let mut r = Raiser {
        prog,
        ids: ids.clone(),
        latest: HashMap::new(),
        order: Vec::new(),
        mems: HashMap::new(),
        types: qubits.iter().map(|v| (v.id, v.ty)).collect(),
    };
    let mut wires = qubits.to_vec();
    let mut ops = Vec::new();
    r.expand(name, params, &mut wires, &mut ops, 0)?;
    *ids = r.ids;
    Ok((ops, wires))
}

struct Raiser<'p> {
    prog: &'p QasmProgram,
    ids: ValueAllocator,
    /// The latest-qubit map.
    latest: HashMap<RegRef, Value>,
    /// Physical qubits in declaration order.
    order: Vec<RegRef>,
    mems: HashMap<String, (Value, u32)>,
    /// Types of every value built so far, for checking ops whose regions
    /// capture outer values.
    types: HashMap<ValueId, Type>,
}

fn attrs(pairs: &[(&str, Attr)]) -> Attrs {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn u_attrs(theta: f64, phi: f64, lambda: f64) -> Attrs {
    attrs(&[("theta", Attr::Float(theta)), ("phi", Attr::Float(phi)), ("lambda", Attr::Float(lambda))])
}

/// Library gates with a direct primitive op.
fn native(name: &str, p: &[f64]) -> Option<(OpKind, Attrs)> {
    use OpKind::*;
    let none = Attrs::new;
    Some(match (name, p) {
        ("U" | "u3" | "u", [t, ph, l]) => (U, u_attrs(*t, *ph, *l)),
        ("u2", [ph, l]) => (U, u_attrs(FRAC_PI_2, *ph, *l)),
        ("u1" | "p", [l]) => (U, u_attrs(0.0, 0.0, *l)),
        ("id", []) | ("u0", [_]) => (U, u_attrs(0.0, 0.0, 0.0)),
        ("CX" | "cx", []) => (CNOT, none()),
        ("x", []) => (X, none()),
        ("y", []) => (Y, none()),
        ("z", []) => (Z, none()),
        ("h", []) => (H, none()),
        ("s", []) => (S, none()),
        ("sdg", []) => (Sdg, none()),
        ("t", []) => (T, none()),
        ("tdg", []) => (Tdg, none()),
        ("rx", [a]) => (Rx, attrs(&[("angle", Attr::Float(*a))])),
        ("ry", [a]) => (Ry, attrs(&[("angle", Attr::Float(*a))])),
        ("rz", [a]) => (Rz, attrs(&[("angle", Attr::Float(*a))])),
        _ => return None,
    })
}

impl Raiser<'_> {
    fn build(
        &mut self,
        kind: OpKind,
        operands: &[Value],
        result_types: &[Type],
        attrs: Attrs,
        regions: Vec<Region>,
    ) -> Result<Operation, RaiseError> {
        let types = &self.types;
        let op = build_op_scoped(kind, operands, result_types, attrs, regions, &mut self.ids, &|v| {
            types.get(&v).copied()
        })
        .map_err(|e| RaiseError::Internal(e.to_string()))?;
        for r in &op.results {
            self.types.insert(r.id, r.ty);
        }
        Ok(op)
    }

    fn wire(&self, r: &RegRef) -> Result<Value, RaiseError> {
        self.latest
            .get(r)
            .copied()
            .ok_or_else(|| RaiseError::Internal(format!("qubit {}[{}] is not declared", r.reg, r.index)))
    }

    fn stmt(&mut self, stmt: &QasmStmt, ops: &mut Vec<Operation>) -> Result<(), RaiseError> {
        match stmt {
            QasmStmt::QregDecl { name, size } => {
                for i in 0..*size {
                    let op = self.build(OpKind::Alloc, &[], &[Type::QUBIT], Attrs::new(), vec![])?;
                    let r = RegRef::new(name.clone(), i);
                    self.latest.insert(r.clone(), op.results[0]);
                    self.order.push(r);
                    ops.push(op);
                }
            }
            QasmStmt::CregDecl { name, size } => {
                let op = self.build(
                    OpKind::MemAllocBit,
                    &[],
                    &[],
                    attrs(&[("size", Attr::Int(*size as i64))]),
                    vec![],
                )?;
                self.mems.insert(name.clone(), (op.results[0], *size));
                ops.push(op);
            }
            QasmStmt::GateDef(_) => {}
            QasmStmt::OpaqueDecl { .. } => {}
            QasmStmt::GateApply(g) => {
                let params: Vec<f64> = g
                    .params
                    .iter()
                    .map(|e| e.eval_const().ok_or_else(|| RaiseError::Internal("non-constant parameter".into())))
                    .collect::<Result<_, _>>()?;
                let mut wires: Vec<Value> = g.qubits.iter().map(|r| self.wire(r)).collect::<Result<_, _>>()?;
                self.expand(&g.name, &params, &mut wires, ops, 0)?;
                for (r, v) in g.qubits.iter().zip(wires) {
                    self.latest.insert(r.clone(), v);
                }
            }
            QasmStmt::Measure { qubit, bit } => {
                let q = self.wire(qubit)?;
                let m = self.build(OpKind::Measure, &[q], &[], Attrs::new(), vec![])?;
                let (bits, after) = (m.results[0], m.results[1]);
                ops.push(m);
                let (mem, _) = *self
                    .mems
                    .get(&bit.reg)
                    .ok_or_else(|| RaiseError::Internal(format!("classical register `{}` is not declared", bit.reg)))?;
                let store = self.build(
                    OpKind::MemStoreBit,
                    &[mem, bits],
                    &[],
                    attrs(&[("index", Attr::Int(bit.index as i64))]),
                    vec![],
                )?;
                ops.push(store);
                self.latest.insert(qubit.clone(), after);
            }
            QasmStmt::Reset { qubit } => {
                let q = self.wire(qubit)?;
                let op = self.build(OpKind::Reset, &[q], &[], Attrs::new(), vec![])?;
                self.latest.insert(qubit.clone(), op.results[0]);
                ops.push(op);
            }
            QasmStmt::Barrier { qubits } => {
                let mut distinct: Vec<RegRef> = Vec::new();
                for q in qubits {
                    if !distinct.contains(q) {
                        distinct.push(q.clone());
                    }
                }
                let vals: Vec<Value> = distinct.iter().map(|r| self.wire(r)).collect::<Result<_, _>>()?;
                let op = self.build(OpKind::Barrier, &vals, &[], Attrs::new(), vec![])?;
                for (r, v) in distinct.iter().zip(&op.results) {
                    self.latest.insert(r.clone(), *v);
                }
                ops.push(op);
            }
            QasmStmt::If { creg, value, body } => self.conditional(creg, *value, body, ops)?,
        }
        Ok(())
    }

    fn conditional(&mut self, creg: &str, value: u64, body: &QasmStmt, ops: &mut Vec<Operation>) -> Result<(), RaiseError> {
        let (mem, width) = *self
            .mems
            .get(creg)
            .ok_or_else(|| RaiseError::Internal(format!("classical register `{creg}` is not declared")))?;
        if width > MAX_IF_WIDTH {
            return Err(RaiseError::Unsupported(format!(
                "`if` on register `{creg}` of width {width} (at most {MAX_IF_WIDTH} bits)"
            )));
        }
        // Σ c[i]·2^i, c[0] least significant.
        let mut acc: Option<Value> = None;
        for i in 0..width {
            let load = self.build(OpKind::MemLoadBit, &[mem], &[], attrs(&[("index", Attr::Int(i as i64))]), vec![])?;
            let mut term = load.results[0];
            ops.push(load);
            if i > 0 {
                let k = self.build(OpKind::ConstInt, &[], &[], attrs(&[("value", Attr::Int(1i64 << i))]), vec![])?;
                let kv = k.results[0];
                ops.push(k);
                let mul = self.build(OpKind::MulI, &[term, kv], &[], Attrs::new(), vec![])?;
                term = mul.results[0];
                ops.push(mul);
            }
            acc = Some(match acc {
                None => term,
                Some(a) => {
                    let add = self.build(OpKind::AddI, &[a, term], &[], Attrs::new(), vec![])?;
                    let v = add.results[0];
                    ops.push(add);
                    v
                }
            });
        }
        let acc = acc.ok_or_else(|| RaiseError::Internal("empty classical register".into()))?;
        // A value the register cannot hold never matches; -1 keeps that true.
        let target = if value < (1u64 << width) { value as i64 } else { -1 };
        let k = self.build(OpKind::ConstInt, &[], &[], attrs(&[("value", Attr::Int(target))]), vec![])?;
        let kv = k.results[0];
        ops.push(k);
        let cmp = self.build(
            OpKind::CmpI,
            &[acc, kv],
            &[],
            attrs(&[("predicate", Attr::Int(CmpPredicate::Eq as i64))]),
            vec![],
        )?;
        let cond = cmp.results[0];
        ops.push(cmp);

        let touched: Vec<RegRef> = match body {
            QasmStmt::GateApply(g) => {
                let mut t: Vec<RegRef> = Vec::new();
                for q in &g.qubits {
                    if !t.contains(q) {
                        t.push(q.clone());
                    }
                }
                t
            }
            QasmStmt::Measure { qubit, .. } | QasmStmt::Reset { qubit } => vec![qubit.clone()],
            other => return Err(RaiseError::Unsupported(format!("conditional statement {other:?}"))),
        };
        let before: Vec<Value> = touched.iter().map(|r| self.wire(r)).collect::<Result<_, _>>()?;

        let mut then_ops = Vec::new();
        self.stmt(body, &mut then_ops)?;
        let after: Vec<Value> = touched.iter().map(|r| self.wire(r)).collect::<Result<_, _>>()?;
        then_ops.push(self.build(OpKind::Yield, &after, &[], Attrs::new(), vec![])?);
        let else_ops = vec![self.build(OpKind::Yield, &before, &[], Attrs::new(), vec![])?];

        let result_types: Vec<Type> = before.iter().map(|v| v.ty).collect();
        let op = self.build(
            OpKind::ScfIf,
            &[cond],
            &result_types,
            Attrs::new(),
            vec![
                Region::single(Block::new(vec![], then_ops)),
                Region::single(Block::new(vec![], else_ops)),
            ],
        )?;
        for (r, v) in touched.iter().zip(&op.results) {
            self.latest.insert(r.clone(), *v);
        }
        ops.push(op);
        Ok(())
    }

    /// Applies gate `name` to `wires`, replacing each wire with its new value.
    fn expand(
        &mut self,
        name: &str,
        params: &[f64],
        wires: &mut [Value],
        ops: &mut Vec<Operation>,
        depth: usize,
    ) -> Result<(), RaiseError> {
        if depth > MAX_EXPANSION_DEPTH {
            return Err(RaiseError::Unsupported(format!("gate `{name}` nests too deeply")));
        }
        let user = self.prog.user_gate(name);
        if user.is_none() {
            if let Some((kind, a)) = native(name, params) {
                let op = self.build(kind, wires, &[], a, vec![])?;
                wires.copy_from_slice(&op.results);
                ops.push(op);
                return Ok(());
            }
            if self.prog.is_opaque(name) {
                return Err(RaiseError::Unsupported(format!("opaque gate `{name}`")));
            }
        }
        let def = user
            .or_else(|| qelib::lookup(name))
            .ok_or_else(|| RaiseError::UnknownGate(name.to_string()))?;
        if def.params.len() != params.len() || def.qargs.len() != wires.len() {
            return Err(RaiseError::Internal(format!("gate `{name}` applied with the wrong arity")));
        }
        for stmt in &def.body {
            let (inner, exprs, args) = match stmt {
                GateBodyStmt::Apply { name, params, args } => (Some(name), params.as_slice(), args),
                GateBodyStmt::Barrier(args) => (None, &[][..], args),
            };
            let idx: Vec<usize> = args
                .iter()
                .map(|a| def.qargs.iter().position(|q| q == a).expect("parser checked gate arguments"))
                .collect();
            let mut sub: Vec<Value> = idx.iter().map(|i| wires[*i]).collect();
            match inner {
                Some(inner) => {
                    let values: Vec<f64> = exprs
                        .iter()
                        .map(|e| {
                            e.eval_bound(&def.params, params)
                                .map_err(|p| RaiseError::Internal(format!("unbound parameter `{p}` in gate `{name}`")))
                        })
                        .collect::<Result<_, _>>()?;
                    self.expand(inner, &values, &mut sub, ops, depth + 1)?;
                }
                None => {
                    let mut distinct = Vec::new();
                    for i in &idx {
                        if !distinct.contains(i) {
                            distinct.push(*i);
                        }
                    }
                    let vals: Vec<Value> = distinct.iter().map(|i| wires[*i]).collect();
                    let op = self.build(OpKind::Barrier, &vals, &[], Attrs::new(), vec![])?;
                    for (i, v) in distinct.iter().zip(&op.results) {
                        wires[*i] = *v;
                    }
                    ops.push(op);
                    continue;
                }
            }
            for (i, v) in idx.iter().zip(sub) {
                wires[*i] = v;
            }
        }
        Ok(())
    }
}

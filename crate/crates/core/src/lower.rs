//! Lowering from the SSA IR back to OpenQASM 2.0.
//!
//! Every qubit value is traced back to the physical wire(s) of the `Alloc`
//! it descends from: a gate's results sit on the same wires as its
//! operands, `split`/`concat`/`cast` only re-slice wire lists. With that
//! map in hand a gate is printed on its operands' wires and its results
//! vanish.
//!
//! Classical memory is handled the other way round. A measurement is
//! printed as `measure q[i] -> c[j];` where `c[j]` is the cell its bit
//! result is stored into; a measurement whose bit is never stored, or is
//! consumed by anything other than a store, has no QASM equivalent. An
//! `scf.if` lowers only when its condition is the integer value of a whole
//! memory compared for equality with a constant, which is exactly what
//! `if (c == n)` raises to.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::ir::{CmpPredicate, Function, Module, OpKind, Operation, Region, Size, Type, ValueId};
use crate::linalg::zyz_angles;
use crate::qasm::{Expr, GateApply, QasmProgram, QasmStmt, RegRef};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("not lowerable: {0}")]
pub struct NotLowerable(pub String);

fn nl<T>(msg: impl Into<String>) -> Result<T, NotLowerable> {
    Err(NotLowerable(msg.into()))
}

/// Name of the single quantum register of lowered programs.
pub const QREG: &str = "q";

/// Lowers `main` to an OpenQASM program.
pub fn lower(module: &Module) -> Result<QasmProgram, NotLowerable> {
    let mut l = Lowerer::new(module)?;
    l.run()?;
    let mut stmts = Vec::new();
    if l.nwires > 0 {
        stmts.push(QasmStmt::QregDecl {
            name: QREG.into(),
            size: l.nwires as u32,
        });
    }
    let names = l.creg_names();
    for (name, size) in names.iter().zip(&l.mem_sizes) {
        stmts.push(QasmStmt::CregDecl {
            name: name.clone(),
            size: *size,
        });
    }
    for s in l.out.drain(..) {
        stmts.push(s.finish(&names));
    }
    Ok(QasmProgram::new(stmts))
}

/// Physical wire of every `qubit<1>` value in `main`.
pub fn wire_trace(module: &Module) -> Result<BTreeMap<ValueId, usize>, NotLowerable> {
    let mut l = Lowerer::new(module)?;
    l.run()?;
    Ok(l.wires
        .iter()
        .filter(|(_, w)| w.len() == 1)
        .map(|(v, w)| (*v, w[0]))
        .collect())
}

/// A statement whose creg names are resolved once every memory is known.
enum Pending {
    Stmt(QasmStmt),
    Measure { wire: usize, mem: usize, index: u32, cond: Option<(usize, u64)> },
    Cond { mem: usize, value: u64, body: QasmStmt },
}

impl Pending {
    fn finish(self, names: &[String]) -> QasmStmt {
        match self {
            Pending::Stmt(s) => s,
            Pending::Measure { wire, mem, index, cond } => {
                let m = QasmStmt::Measure {
                    qubit: RegRef::new(QREG, wire as u32),
                    bit: RegRef::new(names[mem].clone(), index),
                };
                match cond {
                    Some((c, value)) => QasmStmt::If {
                        creg: names[c].clone(),
                        value,
                        body: Box::new(m),
                    },
                    None => m,
                }
            }
            Pending::Cond { mem, value, body } => QasmStmt::If {
                creg: names[mem].clone(),
                value,
                body: Box::new(body),
            },
        }
    }
}

/// Integer value expressed as `constant + Σ coeff · cell`.
#[derive(Clone, Debug, Default)]
struct Linear {
    constant: i128,
    terms: BTreeMap<(usize, u32), i128>,
    /// Memory generations the loads were made at.
    reads: BTreeMap<usize, u64>,
}

struct Lowerer<'a> {
    func: &'a Function,
    nwires: usize,
    wires: HashMap<ValueId, Vec<usize>>,
    /// mem value -> memory index
    mems: HashMap<ValueId, usize>,
    mem_sizes: Vec<u32>,
    /// bumped every time a measurement writes the memory
    generation: Vec<u64>,
    /// bit value -> stores still expected for it
    pending_bits: HashMap<ValueId, usize>,
    /// cells written in QASM whose IR store has not been reached yet
    pending_cells: HashMap<(usize, u32), ValueId>,
    ints: HashMap<ValueId, Linear>,
    angles: HashMap<ValueId, f64>,
    bools: HashMap<ValueId, (usize, u64, Option<u64>)>,
    uses: HashMap<ValueId, Vec<(OpKind, usize)>>,
    out: Vec<Pending>,
}

impl<'a> Lowerer<'a> {
    fn new(module: &'a Module) -> Result<Self, NotLowerable> {
        let Some(func) = module.main() else {
            return nl("module has no `main` function");
        };
        if !func.is_single_block() {
            return nl("`main` has more than one block; unstructured control flow cannot be lowered");
        }
        let mut uses: HashMap<ValueId, Vec<(OpKind, usize)>> = HashMap::new();
        func.body.walk(&mut |op| {
            for (slot, v) in op.all_uses().enumerate() {
                uses.entry(v).or_default().push((op.kind.clone(), slot));
            }
        });
        Ok(Lowerer {
            func,
            nwires: 0,
            wires: HashMap::new(),
            mems: HashMap::new(),
            mem_sizes: Vec::new(),
            generation: Vec::new(),
            pending_bits: HashMap::new(),
            pending_cells: HashMap::new(),
            ints: HashMap::new(),
            angles: HashMap::new(),
            bools: HashMap::new(),
            uses,
            out: Vec::new(),
        })
    }

    fn creg_names(&self) -> Vec<String> {
        match self.mem_sizes.len() {
            1 => vec!["c".into()],
            n => (0..n).map(|i| format!("c{i}")).collect(),
        }
    }

    fn run(&mut self) -> Result<(), NotLowerable> {
        for a in &self.func.body.blocks[0].args {
            if a.ty.is_qubit() {
                return nl("`main` takes qubit arguments");
            }
        }
        let ops = &self.func.body.blocks[0].ops;
        for op in ops {
            self.op(op, None)?;
        }
        if let Some(v) = self.pending_bits.keys().next() {
            return nl(format!("measurement result {v} is not stored before the end of `main`"));
        }
        Ok(())
    }

    fn wires_of(&self, v: ValueId) -> Result<Vec<usize>, NotLowerable> {
        self.wires
            .get(&v)
            .cloned()
            .ok_or_else(|| NotLowerable(format!("{v} is not a qubit value reachable from an alloc")))
    }

    fn static_size(ty: Type) -> Result<usize, NotLowerable> {
        match ty {
            Type::Qubit(Size::Static(n)) | Type::Bits(Size::Static(n)) => Ok(n as usize),
            Type::Qubit(Size::Dynamic) | Type::Bits(Size::Dynamic) => nl("dynamically sized qubit arrays cannot be lowered"),
            _ => Ok(0),
        }
    }

    fn angle_params(&self, op: &Operation) -> Result<Vec<f64>, NotLowerable> {
        if let Some(a) = op.static_angles() {
            return Ok(a);
        }
        let nq = op.gate_qubit_operands().len();
        op.operands[nq..]
            .iter()
            .map(|v| {
                self.angles
                    .get(v)
                    .copied()
                    .ok_or_else(|| NotLowerable(format!("angle {v} is not a constant")))
            })
            .collect()
    }

    fn gate_stmt(&self, op: &Operation) -> Result<QasmStmt, NotLowerable> {
        use OpKind::*;
        let qubits: Vec<usize> = op
            .gate_qubit_operands()
            .iter()
            .map(|v| self.wires_of(*v))
            .collect::<Result<Vec<_>, _>>()?
            .concat();
        let (name, params) = match &op.kind {
            CNOT => ("cx", vec![]),
            X => ("x", vec![]),
            Y => ("y", vec![]),
            Z => ("z", vec![]),
            H => ("h", vec![]),
            S => ("s", vec![]),
            Sdg => ("sdg", vec![]),
            T => ("t", vec![]),
            Tdg => ("tdg", vec![]),
            Rx => ("rx", self.angle_params(op)?),
            Ry => ("ry", self.angle_params(op)?),
            Rz => ("rz", self.angle_params(op)?),
            U => ("u3", self.angle_params(op)?),
            Gate => {
                let m = op.gate_matrix().ok_or_else(|| NotLowerable("qssa.gate without a matrix".into()))?;
                if m.dim() != 2 {
                    return nl("multi-qubit qssa.gate has no OpenQASM 2.0 spelling");
                }
                let (t, p, l) = zyz_angles(&m);
                ("u3", vec![t, p, l])
            }
            k => return nl(format!("`{}` is not a gate", k.name())),
        };
        if qubits.len() != op.results.iter().map(|r| Self::static_size(r.ty)).sum::<Result<usize, _>>()? {
            return nl("gate operand and result widths differ");
        }
        Ok(QasmStmt::GateApply(GateApply {
            name: name.into(),
            params: params.into_iter().map(Expr::Num).collect(),
            qubits: qubits.into_iter().map(|w| RegRef::new(QREG, w as u32)).collect(),
        }))
    }

    /// Assigns the concatenated `wires` to `op`'s qubit results in order.
    fn pass_through(&mut self, op: &Operation, wires: Vec<usize>) -> Result<(), NotLowerable> {
        let mut at = 0;
        for r in &op.results {
            if r.ty.is_qubit() {
                let n = Self::static_size(r.ty)?;
                let slice = wires
                    .get(at..at + n)
                    .ok_or_else(|| NotLowerable(format!("width mismatch at {}", op.kind.name())))?;
                self.wires.insert(r.id, slice.to_vec());
                at += n;
            }
        }
        Ok(())
    }

    fn operand_wires(&self, op: &Operation) -> Result<Vec<usize>, NotLowerable> {
        let mut w = Vec::new();
        for v in &op.operands {
            if let Some(ws) = self.wires.get(v) {
                w.extend_from_slice(ws);
            }
        }
        Ok(w)
    }

    /// Lowers one operation; `cond` is set inside a lowerable `scf.if`.
    fn op(&mut self, op: &Operation, cond: Option<(usize, u64)>) -> Result<(), NotLowerable> {
        use OpKind::*;
        for r in &op.results {
            Self::static_size(r.ty)?;
        }
        match &op.kind {
            Alloc => {
                let n = Self::static_size(op.results[0].ty)?;
                let ws: Vec<usize> = (self.nwires..self.nwires + n).collect();
                self.nwires += n;
                self.wires.insert(op.results[0].id, ws);
            }
            k if k.is_gate() => {
                let stmt = self.gate_stmt(op)?;
                self.emit(stmt, cond);
                let ws = self.operand_wires_qubits(op)?;
                self.pass_through(op, ws)?;
            }
            Split | Concat | Cast | Barrier | Dim => {
                let ws = self.operand_wires(op)?;
                if op.kind == Barrier {
                    let qubits = ws.iter().map(|w| RegRef::new(QREG, *w as u32)).collect();
                    if cond.is_some() {
                        return nl("barrier inside a conditional");
                    }
                    self.out.push(Pending::Stmt(QasmStmt::Barrier { qubits }));
                }
                self.pass_through(op, ws)?;
            }
            Reset => {
                let ws = self.wires_of(op.operands[0])?;
                if ws.len() != 1 {
                    return nl("reset of a qubit array");
                }
                self.emit(QasmStmt::Reset { qubit: RegRef::new(QREG, ws[0] as u32) }, cond);
                self.pass_through(op, ws)?;
            }
            Measure => self.measure(op, cond)?,
            MemAllocBit => {
                let Type::BitMem(n) = op.results[0].ty else {
                    return nl("mem.alloc without a mem<n> result");
                };
                self.mems.insert(op.results[0].id, self.mem_sizes.len());
                self.mem_sizes.push(n);
                self.generation.push(0);
            }
            MemStoreBit => self.store(op)?,
            MemLoadBit => {
                let m = self.mem_of(op.operands[0])?;
                let idx = op.attr_int("index").unwrap_or(0) as u32;
                if self.pending_cells.contains_key(&(m, idx)) {
                    return nl("memory cell is read between a measurement and its store");
                }
                let mut lin = Linear::default();
                lin.terms.insert((m, idx), 1);
                lin.reads.insert(m, self.generation[m]);
                self.ints.insert(op.results[0].id, lin);
            }
            ConstInt => {
                let lin = Linear {
                    constant: i128::from(op.attr_int("value").unwrap_or(0)),
                    ..Default::default()
                };
                self.ints.insert(op.results[0].id, lin);
            }
            ConstAngle => {
                if let Some(v) = op.attr_float("value") {
                    self.angles.insert(op.results[0].id, v);
                }
            }
            AddI | SubI | MulI => {
                let a = self.ints.get(&op.operands[0]).cloned();
                let b = self.ints.get(&op.operands[1]).cloned();
                if let (Some(a), Some(b)) = (a, b) {
                    if let Some(r) = combine(&op.kind, a, b) {
                        self.ints.insert(op.results[0].id, r);
                    }
                }
            }
            CmpI => {
                let pred = op.attr_int("predicate").and_then(CmpPredicate::from_i64);
                let a = self.ints.get(&op.operands[0]);
                let b = self.ints.get(&op.operands[1]);
                if let (Some(CmpPredicate::Eq), Some(a), Some(b)) = (pred, a, b) {
                    if let Some(c) = self.register_equality(a, b) {
                        self.bools.insert(op.results[0].id, c);
                    }
                }
            }
            ScfIf => {
                if cond.is_some() {
                    return nl("nested conditionals");
                }
                self.scf_if(op)?;
            }
            ScfFor => return nl("scf.for remains; run the unroll pass first"),
            Call(f) => return nl(format!("call to @{f} remains; run the inline pass first")),
            Br | CondBr => return nl("unstructured control flow"),
            Return | Yield => {}
            k => return nl(format!("unsupported operation `{}`", k.name())),
        }
        Ok(())
    }

    fn operand_wires_qubits(&self, op: &Operation) -> Result<Vec<usize>, NotLowerable> {
        Ok(op
            .gate_qubit_operands()
            .iter()
            .map(|v| self.wires_of(*v))
            .collect::<Result<Vec<_>, _>>()?
            .concat())
    }

    fn emit(&mut self, stmt: QasmStmt, cond: Option<(usize, u64)>) {
        self.out.push(match cond {
            Some((mem, value)) => Pending::Cond { mem, value, body: stmt },
            None => Pending::Stmt(stmt),
        });
    }

    fn mem_of(&self, v: ValueId) -> Result<usize, NotLowerable> {
        self.mems
            .get(&v)
            .copied()
            .ok_or_else(|| NotLowerable(format!("{v} is not a bit memory")))
    }

    fn measure(&mut self, op: &Operation, cond: Option<(usize, u64)>) -> Result<(), NotLowerable> {
        let ws = self.wires_of(op.operands[0])?;
        if ws.len() != 1 {
            return nl("measurement of a qubit array (its bits cannot be stored)");
        }
        let bits = op.results[0].id;
        let users = self.uses.get(&bits).cloned().unwrap_or_default();
        if users.is_empty() {
            return nl(format!("measurement result {bits} is never stored"));
        }
        if users.iter().any(|(k, slot)| *k != OpKind::MemStoreBit || *slot != 1) {
            return nl(format!("measurement result {bits} feeds classical computation"));
        }
        let stores = self.stores_of(bits);
        for &(mem_val, index) in &stores {
            let mem = self.mem_of(mem_val)?;
            if self.pending_cells.insert((mem, index), bits).is_some() {
                return nl("two measurements race for the same memory cell");
            }
            self.generation[mem] += 1;
            self.out.push(Pending::Measure {
                wire: ws[0],
                mem,
                index,
                cond,
            });
        }
        self.pending_bits.insert(bits, stores.len());
        self.pass_through(op, ws)
    }

    /// `(mem value, index)` of every store of `bits`, in program order.
    fn stores_of(&self, bits: ValueId) -> Vec<(ValueId, u32)> {
        let mut v = Vec::new();
        self.func.body.walk(&mut |o| {
            if o.kind == OpKind::MemStoreBit && o.operands.get(1) == Some(&bits) {
                v.push((o.operands[0], o.attr_int("index").unwrap_or(0) as u32));
            }
        });
        v
    }

    fn store(&mut self, op: &Operation) -> Result<(), NotLowerable> {
        let mem = self.mem_of(op.operands[0])?;
        let index = op.attr_int("index").unwrap_or(0) as u32;
        let bits = op.operands[1];
        if self.pending_cells.get(&(mem, index)) != Some(&bits) {
            return nl("store of a bit that was not measured just before");
        }
        self.pending_cells.remove(&(mem, index));
        if let Some(n) = self.pending_bits.get_mut(&bits) {
            *n -= 1;
            if *n == 0 {
                self.pending_bits.remove(&bits);
            }
        }
        Ok(())
    }

    /// Recognises `value(mem) == k`; returns (mem, k, generation), with
    /// `k = None` when no register value can match.
    fn register_equality(&self, a: &Linear, b: &Linear) -> Option<(usize, u64, Option<u64>)> {
        let (reg, k) = if a.terms.is_empty() { (b, a) } else { (a, b) };
        if !k.terms.is_empty() {
            return None;
        }
        let mem = reg.terms.keys().next()?.0;
        let size = self.mem_sizes[mem];
        if reg.terms.len() != size as usize {
            return None;
        }
        for i in 0..size {
            if reg.terms.get(&(mem, i)) != Some(&(1i128 << i)) {
                return None;
            }
        }
        let target = k.constant - reg.constant;
        let value = (0..(1i128 << size)).contains(&target).then_some(target as u64);
        Some((mem, value.unwrap_or(0), value.map(|_| reg.reads[&mem])))
    }

    fn scf_if(&mut self, op: &Operation) -> Result<(), NotLowerable> {
        let Some(&(mem, value, generation)) = self.bools.get(&op.operands[0]) else {
            return nl("scf.if condition is not a register equality test");
        };
        let [then_r, else_r] = [&op.regions[0], &op.regions[1]];
        let (Some(then_b), Some(else_b)) = (single_block(then_r), single_block(else_r)) else {
            return nl("scf.if with multi-block regions");
        };
        let else_yield = &else_b.ops.last().ok_or_else(|| NotLowerable("empty else region".into()))?.operands;
        if else_b.ops.len() != 1 {
            return nl("scf.if with a non-empty else branch");
        }
        let live = match generation {
            Some(g) => {
                if self.generation[mem] != g {
                    return nl("register changes between the condition and the scf.if");
                }
                Some((mem, value))
            }
            None => None,
        };
        let body: Vec<&Operation> = then_b.ops.iter().filter(|o| o.kind != OpKind::Yield).collect();
        let counted = body.iter().filter(|o| o.kind.is_counted()).count();
        let measures = body.iter().filter(|o| o.kind == OpKind::Measure).count();
        if counted > 1 && measures > 0 {
            return nl("conditional block mixes a measurement with other operations");
        }
        let start = self.out.len();
        for o in &body {
            if !(o.kind.is_counted() || matches!(o.kind, OpKind::MemStoreBit | OpKind::ConstAngle)) {
                return nl(format!("`{}` inside a conditional", o.kind.name()));
            }
            self.op(o, live.or(Some((mem, u64::MAX))))?;
        }
        if live.is_none() {
            // The condition can never hold: drop what the branch emitted.
            self.out.truncate(start);
        }
        let then_yield = &then_b.ops.last().expect("checked non-empty").operands;
        for (j, r) in op.results.iter().enumerate() {
            let (t, e) = (self.wires_of(then_yield[j])?, self.wires_of(else_yield[j])?);
            if t != e {
                return nl("scf.if branches leave a qubit on different wires");
            }
            self.wires.insert(r.id, t);
        }
        Ok(())
    }
}

fn single_block(r: &Region) -> Option<&crate::ir::Block> {
    (r.blocks.len() == 1).then(|| &r.blocks[0])
}

fn combine(kind: &OpKind, a: Linear, b: Linear) -> Option<Linear> {
    let scale = |mut l: Linear, k: i128| {
        l.constant *= k;
        l.terms.values_mut().for_each(|c| *c *= k);
        l
    };
    let add = |mut a: Linear, b: Linear, sign: i128| {
        a.constant += sign * b.constant;
        for (cell, c) in b.terms {
            *a.terms.entry(cell).or_insert(0) += sign * c;
        }
        a.terms.retain(|_, c| *c != 0);
        for (m, g) in b.reads {
            if *a.reads.entry(m).or_insert(g) != g {
                return None;
            }
        }
        Some(a)
    };
    match kind {
        OpKind::AddI => add(a, b, 1),
        OpKind::SubI => add(a, b, -1),
        OpKind::MulI if a.terms.is_empty() => Some(scale(b, a.constant)),
        OpKind::MulI if b.terms.is_empty() => Some(scale(a, b.constant)),
        _ => None,
    }
}

use std::collections::HashMap;

use super::{explore, Brancher, Distribution, SimError, Statevector, MAX_DIST_QUBITS, MAX_MEASURED_BITS, MAX_UNITARY_QUBITS};
use crate::ir::{CmpPredicate, Function, Module, OpKind, Operation, Region, Size, Type, ValueId};
use crate::linalg::{gates, CMatrix};

const MAX_STEPS: u64 = 50_000_000;
const MAX_CALL_DEPTH: usize = 256;

/// Exact outcome distribution of `main`.
///
/// Qubit arguments of `main` start in `|0⟩`; other argument types are
/// rejected.
pub fn run_distribution(module: &Module) -> Result<Distribution, SimError> {
    let main = entry(module)?;
    explore(|b| {
        let mut m = Machine::new(module, Backend::Sv(Statevector::zero(0)?), Some(b));
        m.run_main(main)?;
        Ok(m.key())
    })
}

/// The unitary implemented by a measurement-free `main`, over all qubits it
/// allocates (in allocation order, qubit 0 least significant). Qubit
/// arguments of `main` come first.
pub fn circuit_unitary(module: &Module) -> Result<CMatrix, SimError> {
    let main = entry(module)?;
    let mut counter = Machine::new(module, Backend::Count(0), None);
    counter.run_main(main)?;
    let Backend::Count(n) = counter.q else { unreachable!() };
    if n > MAX_UNITARY_QUBITS {
        return Err(SimError::TooLarge(format!("{n} qubits (unitary limit {MAX_UNITARY_QUBITS})")));
    }
    let cols = (0..1usize << n).map(|j| Statevector::basis(n, j)).collect::<Result<Vec<_>, _>>()?;
    let mut m = Machine::new(module, Backend::Cols { cols, next: 0 }, None);
    m.run_main(main)?;
    let Backend::Cols { cols, .. } = m.q else { unreachable!() };
    let dim = 1usize << n;
    let mut u = CMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, a) in col.amplitudes().iter().enumerate() {
            u.set(i, j, *a);
        }
    }
    Ok(u)
}

fn entry(module: &Module) -> Result<&Function, SimError> {
    module
        .main()
        .ok_or_else(|| SimError::Unsupported("module has no `main` function".into()))
}

enum Backend {
    Sv(Statevector),
    Count(usize),
    Cols { cols: Vec<Statevector>, next: usize },
}

#[derive(Clone, Debug)]
enum Val {
    Q(Vec<usize>),
    Int(i64),
    Bool(bool),
    Angle(f64),
    Bits(Vec<bool>),
    Mem(usize),
}

type Env = HashMap<ValueId, Val>;

struct Machine<'m, 'b, 's> {
    module: &'m Module,
    q: Backend,
    brancher: Option<&'b mut Brancher<'s>>,
    mems: Vec<Vec<bool>>,
    record: Vec<bool>,
    steps: u64,
    depth: usize,
}

fn rt(msg: impl Into<String>) -> SimError {
    SimError::Runtime(msg.into())
}

impl<'m, 'b, 's> Machine<'m, 'b, 's> {
    fn new(module: &'m Module, q: Backend, brancher: Option<&'b mut Brancher<'s>>) -> Self {
        Machine {
            module,
            q,
            brancher,
            mems: Vec::new(),
            record: Vec::new(),
            steps: 0,
            depth: 0,
        }
    }

    fn key(&self) -> String {
        if self.mems.is_empty() {
            self.record.iter().map(|b| if *b { '1' } else { '0' }).collect()
        } else {
            let regs: Vec<String> = self
                .mems
                .iter()
                .map(|m| m.iter().rev().map(|b| if *b { '1' } else { '0' }).collect())
                .collect();
            regs.join(" ")
        }
    }

    fn run_main(&mut self, main: &Function) -> Result<(), SimError> {
        let mut args = Vec::new();
        for t in &main.inputs {
            match t {
                Type::Qubit(Size::Static(n)) => args.push(Val::Q(self.alloc(*n as usize)?)),
                other => return Err(SimError::Unsupported(format!("`main` argument of type {other}"))),
            }
        }
        self.call(main, args)?;
        Ok(())
    }

    fn alloc(&mut self, n: usize) -> Result<Vec<usize>, SimError> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(match &mut self.q {
                Backend::Sv(sv) => {
                    if sv.num_qubits() >= MAX_DIST_QUBITS {
                        return Err(SimError::TooLarge(format!("more than {MAX_DIST_QUBITS} qubits")));
                    }
                    sv.add_qubit()?
                }
                Backend::Count(c) => {
                    *c += 1;
                    *c - 1
                }
                Backend::Cols { next, .. } => {
                    *next += 1;
                    *next - 1
                }
            });
        }
        Ok(out)
    }

    fn apply(&mut self, m: &CMatrix, targets: &[usize]) -> Result<(), SimError> {
        match &mut self.q {
            Backend::Sv(sv) => sv.apply_matrix(m, targets),
            Backend::Count(_) => Ok(()),
            Backend::Cols { cols, .. } => cols.iter_mut().try_for_each(|c| c.apply_matrix(m, targets)),
        }
    }

    fn measure(&mut self, q: usize, recorded: bool) -> Result<bool, SimError> {
        let (Backend::Sv(sv), Some(b)) = (&mut self.q, self.brancher.as_deref_mut()) else {
            return Err(SimError::HasMeasurement);
        };
        let outcome = b.measure(sv, q);
        if recorded {
            self.record.push(outcome);
            if self.record.len() > MAX_MEASURED_BITS {
                return Err(SimError::TooLarge(format!("more than {MAX_MEASURED_BITS} measured bits")));
            }
        }
        Ok(outcome)
    }

    fn call(&mut self, f: &Function, args: Vec<Val>) -> Result<Vec<Val>, SimError> {
        self.depth += 1;
        if self.depth > MAX_CALL_DEPTH {
            return Err(rt("call depth limit exceeded"));
        }
        let mut env = Env::new();
        let out = self.region(&f.body, &mut env, args);
        self.depth -= 1;
        out
    }

    fn get<'e>(&self, env: &'e Env, v: ValueId) -> Result<&'e Val, SimError> {
        env.get(&v).ok_or_else(|| rt(format!("{v} used before definition")))
    }

    fn vals(&self, env: &Env, vs: &[ValueId]) -> Result<Vec<Val>, SimError> {
        vs.iter().map(|v| self.get(env, *v).cloned()).collect()
    }

    fn qubits(&self, env: &Env, v: ValueId) -> Result<Vec<usize>, SimError> {
        match self.get(env, v)? {
            Val::Q(q) => Ok(q.clone()),
            other => Err(rt(format!("{v} is not a qubit value ({other:?})"))),
        }
    }

    fn int(&self, env: &Env, v: ValueId) -> Result<i64, SimError> {
        match self.get(env, v)? {
            Val::Int(i) => Ok(*i),
            other => Err(rt(format!("{v} is not an integer ({other:?})"))),
        }
    }

    fn region(&mut self, r: &Region, env: &mut Env, mut args: Vec<Val>) -> Result<Vec<Val>, SimError> {
        let mut bi = 0;
        'blocks: loop {
            let block = r.blocks.get(bi).ok_or_else(|| rt(format!("branch to missing block {bi}")))?;
            if block.args.len() != args.len() {
                return Err(rt(format!("block expects {} arguments, got {}", block.args.len(), args.len())));
            }
            for (a, v) in block.args.iter().zip(args.drain(..)) {
                env.insert(a.id, v);
            }
            for op in &block.ops {
                self.steps += 1;
                if self.steps > MAX_STEPS {
                    return Err(SimError::TooLarge(format!("more than {MAX_STEPS} executed operations")));
                }
                match op.kind {
                    OpKind::Return | OpKind::Yield => return self.vals(env, &op.operands),
                    OpKind::Br => {
                        let s = &op.successors[0];
                        args = self.vals(env, &s.args)?;
                        bi = s.block;
                        continue 'blocks;
                    }
                    OpKind::CondBr => {
                        let taken = match self.get(env, op.operands[0])? {
                            Val::Bool(c) => *c,
                            other => return Err(rt(format!("branch condition is not i1 ({other:?})"))),
                        };
                        let s = &op.successors[if taken { 0 } else { 1 }];
                        args = self.vals(env, &s.args)?;
                        bi = s.block;
                        continue 'blocks;
                    }
                    _ => {
                        let results = self.op(op, env)?;
                        if results.len() != op.results.len() {
                            return Err(rt(format!(
                                "`{}` produced {} values for {} results",
                                op.kind.name(),
                                results.len(),
                                op.results.len()
                            )));
                        }
                        for (r, v) in op.results.iter().zip(results) {
                            env.insert(r.id, v);
                        }
                    }
                }
            }
            return Ok(Vec::new());
        }
    }

    fn op(&mut self, op: &Operation, env: &mut Env) -> Result<Vec<Val>, SimError> {
        use OpKind::*;
        Ok(match &op.kind {
            Alloc => {
                let n = match op.results[0].ty {
                    Type::Qubit(Size::Static(n)) => n as usize,
                    _ => {
                        let n = self.int(env, op.operands[0])?;
                        usize::try_from(n).map_err(|_| rt(format!("negative allocation size {n}")))?
                    }
                };
                vec![Val::Q(self.alloc(n)?)]
            }
            k if k.is_gate() => {
                let qops = op.gate_qubit_operands();
                let mut targets = Vec::new();
                let mut results = Vec::new();
                for &v in qops {
                    let q = self.qubits(env, v)?;
                    targets.extend_from_slice(&q);
                    results.push(Val::Q(q));
                }
                let angles = match op.static_angles() {
                    Some(a) => a,
                    None => op.operands[qops.len()..]
                        .iter()
                        .map(|v| match self.get(env, *v)? {
                            Val::Angle(a) => Ok(*a),
                            other => Err(rt(format!("angle operand is not f64 ({other:?})"))),
                        })
                        .collect::<Result<_, _>>()?,
                };
                let m = crate::ir::gate_matrix(k, &angles, op.attrs.get("matrix"))
                    .ok_or_else(|| rt(format!("cannot build the matrix of `{}`", k.name())))?;
                self.apply(&m, &targets)?;
                results
            }
            Measure => {
                let q = self.qubits(env, op.operands[0])?;
                let mut bits = Vec::with_capacity(q.len());
                for &i in &q {
                    bits.push(self.measure(i, true)?);
                }
                vec![Val::Bits(bits), Val::Q(q)]
            }
            Reset => {
                let q = self.qubits(env, op.operands[0])?;
                if self.measure(q[0], false)? {
                    self.apply(&gates::x(), &q)?;
                }
                vec![Val::Q(q)]
            }
            Split => {
                let q = self.qubits(env, op.operands[0])?;
                let (a, b) = match (op.results[0].ty.qubit_width(), op.results[1].ty.qubit_width()) {
                    (Some(a), Some(b)) => (a as usize, b as usize),
                    _ => {
                        let a = self.int(env, op.operands[1])?;
                        let b = self.int(env, op.operands[2])?;
                        (
                            usize::try_from(a).map_err(|_| rt("negative split size"))?,
                            usize::try_from(b).map_err(|_| rt("negative split size"))?,
                        )
                    }
                };
                if a + b != q.len() {
                    return Err(rt(format!("split of {} qubits into {a} + {b}", q.len())));
                }
                vec![Val::Q(q[..a].to_vec()), Val::Q(q[a..].to_vec())]
            }
            Concat => {
                let mut a = self.qubits(env, op.operands[0])?;
                a.extend(self.qubits(env, op.operands[1])?);
                vec![Val::Q(a)]
            }
            Dim => {
                let q = self.qubits(env, op.operands[0])?;
                vec![Val::Int(q.len() as i64), Val::Q(q)]
            }
            Cast => {
                let q = self.qubits(env, op.operands[0])?;
                if let Some(w) = op.results[0].ty.qubit_width() {
                    if w as usize != q.len() {
                        return Err(rt(format!("cast of {} qubits to qubit<{w}>", q.len())));
                    }
                }
                vec![Val::Q(q)]
            }
            Barrier => self.vals(env, &op.operands)?,
            Call(name) => {
                let f = self
                    .module
                    .function(name)
                    .ok_or_else(|| rt(format!("call to unknown function @{name}")))?;
                let args = self.vals(env, &op.operands)?;
                self.call(f, args)?
            }
            ScfIf => {
                let c = match self.get(env, op.operands[0])? {
                    Val::Bool(c) => *c,
                    other => return Err(rt(format!("scf.if condition is not i1 ({other:?})"))),
                };
                let r = &op.regions[if c { 0 } else { 1 }];
                self.region(r, env, Vec::new())?
            }
            ScfFor => {
                let (lb, ub, step) = (
                    self.int(env, op.operands[0])?,
                    self.int(env, op.operands[1])?,
                    self.int(env, op.operands[2])?,
                );
                if step <= 0 {
                    return Err(rt(format!("scf.for step {step} is not positive")));
                }
                let mut iters = self.vals(env, &op.operands[3..])?;
                let mut i = lb;
                while i < ub {
                    let mut args = vec![Val::Int(i)];
                    args.extend(iters);
                    iters = self.region(&op.regions[0], env, args)?;
                    i = i.checked_add(step).ok_or_else(|| rt("loop counter overflow"))?;
                }
                iters
            }
            ConstInt => vec![Val::Int(op.attr_int("value").unwrap_or(0))],
            ConstAngle => vec![Val::Angle(op.attr_float("value").unwrap_or(0.0))],
            AddI | SubI | MulI => {
                let (a, b) = (self.int(env, op.operands[0])?, self.int(env, op.operands[1])?);
                vec![Val::Int(match op.kind {
                    AddI => a.wrapping_add(b),
                    SubI => a.wrapping_sub(b),
                    _ => a.wrapping_mul(b),
                })]
            }
            CmpI => {
                let (a, b) = (self.int(env, op.operands[0])?, self.int(env, op.operands[1])?);
                let p = op
                    .attr_int("predicate")
                    .and_then(CmpPredicate::from_i64)
                    .ok_or_else(|| rt("cmpi without a valid predicate"))?;
                vec![Val::Bool(p.eval(a, b))]
            }
            MemAllocBit => {
                let n = op.attr_int("size").unwrap_or(0).max(0) as usize;
                self.mems.push(vec![false; n]);
                vec![Val::Mem(self.mems.len() - 1)]
            }
            MemStoreBit => {
                let (Val::Mem(m), Val::Bits(b)) = (self.get(env, op.operands[0])?.clone(), self.get(env, op.operands[1])?)
                else {
                    return Err(rt("mem.store expects (mem, bits<1>)"));
                };
                let idx = op.attr_int("index").unwrap_or(-1);
                let bit = *b.first().ok_or_else(|| rt("empty bits value"))?;
                *self.mems[m]
                    .get_mut(idx as usize)
                    .ok_or_else(|| rt(format!("bit index {idx} out of range")))? = bit;
                Vec::new()
            }
            MemLoadBit => {
                let Val::Mem(m) = self.get(env, op.operands[0])? else {
                    return Err(rt("mem.load expects a mem operand"));
                };
                let idx = op.attr_int("index").unwrap_or(-1);
                let bit = *self.mems[*m]
                    .get(idx as usize)
                    .ok_or_else(|| rt(format!("bit index {idx} out of range")))?;
                vec![Val::Int(bit as i64)]
            }
            Return | Yield | Br | CondBr => unreachable!("terminators handled by the block loop"),
            other => return Err(SimError::Unsupported(format!("operation `{}`", other.name()))),
        })
    }
}

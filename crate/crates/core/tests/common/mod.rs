//! Shared generators and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use qssa::ir::{Attr, Block, Function, Module, OpKind, Operation, Region, Size, Successor, Type, Value, ValueId};
use qssa::linalg::gates;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// `(file name, source)` for every corpus file in `sub` ("" for the main corpus).
pub fn corpus(sub: &str) -> Vec<(String, String)> {
    let dir = corpus_dir().join(sub);
    let mut v: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "qasm"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

// ---------------------------------------------------------------------------
// Random OpenQASM circuits
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct CircuitShape {
    pub max_qubits: usize,
    pub max_gates: usize,
    /// Measure everything at the end.
    pub final_measure: bool,
    /// Allow mid-circuit measurement, `reset` and `if`.
    pub dynamic: bool,
}

fn angle<R: Rng>(rng: &mut R) -> f64 {
    use std::f64::consts::PI;
    match rng.gen_range(0..6) {
        0 => 0.0,
        1 => PI,
        2 => PI / 2.0,
        _ => rng.gen_range(-2.0 * PI..2.0 * PI),
    }
}

/// A random circuit biased towards cancellable and mergeable neighbours.
pub fn random_circuit<R: Rng>(rng: &mut R, shape: CircuitShape) -> String {
    let n = rng.gen_range(1..=shape.max_qubits);
    let mut s = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(s, "qreg q[{n}];").unwrap();
    if shape.final_measure || shape.dynamic {
        writeln!(s, "creg c[{n}];").unwrap();
    }
    let one = ["x", "y", "z", "h", "s", "sdg", "t", "tdg", "rx", "ry", "rz", "u3", "u1", "sx"];
    let mut prev: Option<String> = None;
    let count = rng.gen_range(0..=shape.max_gates);
    for _ in 0..count {
        if let Some(p) = &prev {
            if rng.gen_bool(0.3) {
                s.push_str(p);
                continue;
            }
        }
        let line = match rng.gen_range(0..10) {
            0..=5 => {
                let g = *one.choose(rng).unwrap();
                let q = rng.gen_range(0..n);
                match g {
                    "rx" | "ry" | "rz" | "u1" => format!("{g}({}) q[{q}];\n", angle(rng)),
                    "u3" => format!("u3({},{},{}) q[{q}];\n", angle(rng), angle(rng), angle(rng)),
                    _ => format!("{g} q[{q}];\n"),
                }
            }
            6..=7 if n >= 2 => {
                let a = rng.gen_range(0..n);
                let b = (a + rng.gen_range(1..n)) % n;
                let g = *["cx", "cx", "cz", "swap"].choose(rng).unwrap();
                format!("{g} q[{a}],q[{b}];\n")
            }
            8 if n >= 3 => {
                let mut qs: Vec<usize> = (0..n).collect();
                qs.shuffle(rng);
                format!("ccx q[{}],q[{}],q[{}];\n", qs[0], qs[1], qs[2])
            }
            9 if shape.dynamic => {
                let q = rng.gen_range(0..n);
                match rng.gen_range(0..3) {
                    0 => format!("measure q[{q}] -> c[{}];\n", rng.gen_range(0..n)),
                    1 => format!("reset q[{q}];\n"),
                    _ => format!("if(c=={}) x q[{q}];\n", rng.gen_range(0..(1u64 << n.min(4)))),
                }
            }
            _ => format!("h q[{}];\n", rng.gen_range(0..n)),
        };
        prev = Some(line.clone());
        s.push_str(&line);
    }
    if shape.final_measure {
        s.push_str("measure q -> c;\n");
    }
    s
}

// ---------------------------------------------------------------------------
// Random structured IR programs
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct Avail {
    id: ValueId,
    consumed: bool,
    /// Loop nesting level of the definition.
    level: usize,
}

/// Generator for single-function structured programs over `qubit<1>`
/// values. Operand choice is biased towards fresh values but occasionally
/// picks a consumed or loop-external one, so a fair share of programs
/// violate the single-use rule in the various ways the verifier must catch.
pub struct StructuredGen<'r, R: Rng> {
    rng: &'r mut R,
    next: u32,
    budget: usize,
    /// Probability of an operand choice ignoring the single-use discipline.
    pub sloppiness: f64,
    /// Also emit plumbing, memory, dynamic-angle and matrix ops.
    pub rich: bool,
}

impl<'r, R: Rng> StructuredGen<'r, R> {
    pub fn new(rng: &'r mut R, max_ops: usize) -> Self {
        StructuredGen {
            rng,
            next: 0,
            // The trailing `return` is always emitted.
            budget: max_ops.saturating_sub(1),
            sloppiness: 0.12,
            rich: false,
        }
    }

    fn fresh(&mut self, ty: Type) -> Value {
        let v = Value::new(ValueId(self.next), ty);
        self.next += 1;
        v
    }

    fn take_budget(&mut self, n: usize) -> bool {
        if self.budget >= n {
            self.budget -= n;
            true
        } else {
            false
        }
    }

    fn pick(&mut self, scope: &mut [Avail], level: usize) -> Option<ValueId> {
        let sloppy = self.rng.gen_bool(self.sloppiness);
        let good: Vec<usize> = (0..scope.len())
            .filter(|&i| sloppy || (!scope[i].consumed && scope[i].level == level))
            .collect();
        let &i = good.choose(self.rng)?;
        scope[i].consumed = true;
        Some(scope[i].id)
    }

    pub fn module(mut self) -> Module {
        let mut ops = Vec::new();
        let mut scope = Vec::new();
        self.block(&mut scope, 0, &mut ops);
        ops.push(Operation::new(OpKind::Return, vec![], vec![]));
        let mut functions = vec![Function::new("main", vec![], vec![], Region::single(Block::new(vec![], ops)))];
        if self.rich {
            functions.push(self.helper());
            functions.push(self.cfg_function());
            let q = self.fresh(Type::QUBIT);
            let r = self.fresh(Type::QUBIT);
            let body = &mut functions[0].body.blocks[0].ops;
            let at = body.len() - 1;
            body.insert(at, Operation::new(OpKind::Alloc, vec![], vec![q]));
            body.insert(at + 1, Operation::new(OpKind::Call("helper".into()), vec![q.id], vec![r]));
        }
        Module::new(functions)
    }

    fn helper(&mut self) -> Function {
        let a = self.fresh(Type::QUBIT);
        let h = self.fresh(Type::QUBIT);
        let ops = vec![
            Operation::new(OpKind::H, vec![a.id], vec![h]),
            Operation::new(OpKind::Return, vec![h.id], vec![]),
        ];
        Function::new("helper", vec![Type::QUBIT], vec![Type::QUBIT], Region::single(Block::new(vec![a], ops)))
    }

    fn cfg_function(&mut self) -> Function {
        let q = self.fresh(Type::QUBIT);
        let (c0, c1, b) = (self.fresh(Type::Int), self.fresh(Type::Int), self.fresh(Type::Bool));
        let (a1, x1) = (self.fresh(Type::QUBIT), self.fresh(Type::QUBIT));
        let a2 = self.fresh(Type::QUBIT);
        let z = self.fresh(Type::QUBIT);
        let (bits, qm) = (self.fresh(Type::Bits(Size::Static(1))), self.fresh(Type::QUBIT));
        let v = self.rng.gen_range(-5..5i64);
        let bb0 = Block::new(
            vec![],
            vec![
                Operation::new(OpKind::Alloc, vec![], vec![q]),
                Operation::new(OpKind::ConstInt, vec![], vec![c0]).with_attr("value", Attr::Int(v)),
                Operation::new(OpKind::ConstInt, vec![], vec![c1]).with_attr("value", Attr::Int(0)),
                Operation::new(OpKind::CmpI, vec![c0.id, c1.id], vec![b]).with_attr("predicate", Attr::Int(2)),
                Operation::new(OpKind::CondBr, vec![b.id], vec![]).with_successors(vec![
                    Successor { block: 1, args: vec![q.id] },
                    Successor { block: 2, args: vec![q.id] },
                ]),
            ],
        );
        let bb1 = Block::new(
            vec![a1],
            vec![
                Operation::new(OpKind::X, vec![a1.id], vec![x1]),
                Operation::new(OpKind::Br, vec![], vec![]).with_successors(vec![Successor { block: 3, args: vec![x1.id] }]),
            ],
        );
        let bb2 = Block::new(
            vec![a2],
            vec![Operation::new(OpKind::Br, vec![], vec![]).with_successors(vec![Successor { block: 3, args: vec![a2.id] }])],
        );
        let bb3 = Block::new(
            vec![z],
            vec![
                Operation::new(OpKind::Measure, vec![z.id], vec![bits, qm]),
                Operation::new(OpKind::Return, vec![], vec![]),
            ],
        );
        Function::new("branchy", vec![], vec![], Region::new(vec![bb0, bb1, bb2, bb3]))
    }

    fn block(&mut self, scope: &mut Vec<Avail>, level: usize, ops: &mut Vec<Operation>) {
        let target = self.rng.gen_range(1..=8usize);
        for _ in 0..target {
            if self.budget == 0 {
                return;
            }
            self.op(scope, level, ops);
        }
    }

    fn alloc(&mut self, scope: &mut Vec<Avail>, level: usize, ops: &mut Vec<Operation>) -> bool {
        if !self.take_budget(1) {
            return false;
        }
        let v = self.fresh(Type::QUBIT);
        ops.push(Operation::new(OpKind::Alloc, vec![], vec![v]));
        scope.push(Avail { id: v.id, consumed: false, level });
        true
    }

    fn op(&mut self, scope: &mut Vec<Avail>, level: usize, ops: &mut Vec<Operation>) {
        let live = scope.iter().filter(|a| !a.consumed && a.level == level).count();
        let choice = if live == 0 { 0 } else { self.rng.gen_range(0..100) };
        match choice {
            0..=9 => {
                self.alloc(scope, level, ops);
            }
            10..=44 => {
                if !self.take_budget(1) {
                    return;
                }
                let Some(q) = self.pick(scope, level) else { return };
                let kinds = [OpKind::X, OpKind::Y, OpKind::Z, OpKind::H, OpKind::S, OpKind::T, OpKind::Rz, OpKind::U];
                let kind = kinds.choose(self.rng).unwrap().clone();
                let r = self.fresh(Type::QUBIT);
                let mut op = Operation::new(kind.clone(), vec![q], vec![r]);
                match kind {
                    OpKind::Rz => op = op.with_attr("angle", Attr::Float(self.rng.gen_range(-3.0..3.0))),
                    OpKind::U => {
                        for n in ["theta", "phi", "lambda"] {
                            op = op.with_attr(n, Attr::Float(self.rng.gen_range(-3.0..3.0)));
                        }
                    }
                    _ => {}
                }
                ops.push(op);
                scope.push(Avail { id: r.id, consumed: false, level });
            }
            45..=59 => {
                if !self.take_budget(1) {
                    return;
                }
                let (Some(a), Some(b)) = (self.pick(scope, level), self.pick(scope, level)) else { return };
                let (x, y) = (self.fresh(Type::QUBIT), self.fresh(Type::QUBIT));
                ops.push(Operation::new(OpKind::CNOT, vec![a, b], vec![x, y]));
                scope.push(Avail { id: x.id, consumed: false, level });
                scope.push(Avail { id: y.id, consumed: false, level });
            }
            60..=67 => {
                if !self.take_budget(1) {
                    return;
                }
                let Some(q) = self.pick(scope, level) else { return };
                let (b, r) = (self.fresh(Type::Bits(Size::Static(1))), self.fresh(Type::QUBIT));
                ops.push(Operation::new(OpKind::Measure, vec![q], vec![b, r]));
                scope.push(Avail { id: r.id, consumed: false, level });
                if self.rich && self.take_budget(2) {
                    let m = self.fresh(Type::BitMem(2));
                    ops.push(Operation::new(OpKind::MemAllocBit, vec![], vec![m]).with_attr("size", Attr::Int(2)));
                    ops.push(
                        Operation::new(OpKind::MemStoreBit, vec![m.id, b.id], vec![]).with_attr("index", Attr::Int(1)),
                    );
                    if self.take_budget(1) {
                        let l = self.fresh(Type::Int);
                        ops.push(Operation::new(OpKind::MemLoadBit, vec![m.id], vec![l]).with_attr("index", Attr::Int(1)));
                    }
                }
            }
            68..=81 => self.scf_if(scope, level, ops),
            82..=91 => self.scf_for(scope, level, ops),
            _ if self.rich => self.rich_op(scope, level, ops),
            _ => {
                self.alloc(scope, level, ops);
            }
        }
    }

    fn const_int(&mut self, v: i64, ops: &mut Vec<Operation>) -> ValueId {
        let c = self.fresh(Type::Int);
        ops.push(Operation::new(OpKind::ConstInt, vec![], vec![c]).with_attr("value", Attr::Int(v)));
        c.id
    }

    fn scf_if(&mut self, scope: &mut Vec<Avail>, level: usize, ops: &mut Vec<Operation>) {
        let k = self.rng.gen_range(0..=2usize);
        // Two constants, the compare, the if, two yields and, worst case, a
        // fresh allocation for every yielded value.
        let reserved = 6 + 2 * k;
        if !self.take_budget(reserved) {
            return;
        }
        let mut spare = 2 * k;
        let v = self.rng.gen_range(0..3);
        let a = self.const_int(v, ops);
        let b = self.const_int(1, ops);
        let cond = self.fresh(Type::Bool);
        ops.push(Operation::new(OpKind::CmpI, vec![a, b], vec![cond]).with_attr("predicate", Attr::Int(0)));
        let mut regions = Vec::new();
        let mut consumed: HashSet<ValueId> = HashSet::new();
        for _ in 0..2 {
            let mut sub = scope.clone();
            let mut body = Vec::new();
            self.block(&mut sub, level, &mut body);
            let mut ys = Vec::new();
            for _ in 0..k {
                if let Some(v) = self.pick(&mut sub, level) {
                    ys.push(v);
                } else {
                    spare -= 1;
                    let v = self.fresh(Type::QUBIT);
                    body.push(Operation::new(OpKind::Alloc, vec![], vec![v]));
                    ys.push(v.id);
                }
            }
            body.push(Operation::new(OpKind::Yield, ys, vec![]));
            consumed.extend(sub.iter().filter(|a| a.consumed).map(|a| a.id));
            regions.push(Region::single(Block::new(vec![], body)));
        }
        self.budget += spare;
        for a in scope.iter_mut() {
            a.consumed |= consumed.contains(&a.id);
        }
        let results: Vec<Value> = (0..k).map(|_| self.fresh(Type::QUBIT)).collect();
        for r in &results {
            scope.push(Avail { id: r.id, consumed: false, level });
        }
        ops.push(Operation::new(OpKind::ScfIf, vec![cond.id], results).with_regions(regions));
    }

    fn scf_for(&mut self, scope: &mut Vec<Avail>, level: usize, ops: &mut Vec<Operation>) {
        let k = self.rng.gen_range(1..=2usize);
        // Three constants, the loop, the yield and up to `k` fallback allocations.
        if !self.take_budget(5 + k) {
            return;
        }
        let mut spare = k;
        let mut iters = Vec::new();
        for _ in 0..k {
            match self.pick(scope, level) {
                Some(v) => iters.push(v),
                None => {
                    self.budget += 5 + k;
                    return;
                }
            }
        }
        let lb = self.const_int(0, ops);
        let trips = self.rng.gen_range(0..=3);
        let ub = self.const_int(trips, ops);
        let step = self.const_int(1, ops);
        let iv = self.fresh(Type::Int);
        let args: Vec<Value> = (0..k).map(|_| self.fresh(Type::QUBIT)).collect();
        let mut sub: Vec<Avail> = scope.clone();
        sub.extend(args.iter().map(|a| Avail { id: a.id, consumed: false, level: level + 1 }));
        let mut body = Vec::new();
        self.block(&mut sub, level + 1, &mut body);
        let mut ys = Vec::new();
        for _ in 0..k {
            match self.pick(&mut sub, level + 1) {
                Some(v) => ys.push(v),
                None => {
                    spare -= 1;
                    let v = self.fresh(Type::QUBIT);
                    body.push(Operation::new(OpKind::Alloc, vec![], vec![v]));
                    ys.push(v.id);
                }
            }
        }
        body.push(Operation::new(OpKind::Yield, ys, vec![]));
        self.budget += spare;
        for a in scope.iter_mut() {
            a.consumed |= sub.iter().any(|s| s.id == a.id && s.consumed);
        }
        let results: Vec<Value> = (0..k).map(|_| self.fresh(Type::QUBIT)).collect();
        for r in &results {
            scope.push(Avail { id: r.id, consumed: false, level });
        }
        let mut block_args = vec![iv];
        block_args.extend(args);
        let mut operands = vec![lb, ub, step];
        operands.extend(iters);
        ops.push(
            Operation::new(OpKind::ScfFor, operands, results).with_regions(vec![Region::single(Block::new(block_args, body))]),
        );
    }

    /// Plumbing, resets, barriers, dynamic angles and explicit matrices.
    fn rich_op(&mut self, scope: &mut Vec<Avail>, level: usize, ops: &mut Vec<Operation>) {
        if !self.take_budget(4) {
            return;
        }
        match self.rng.gen_range(0..5) {
            0 => {
                let n = self.rng.gen_range(2..=3u32);
                let whole = self.fresh(Type::qubits(n));
                let (a, b) = (self.fresh(Type::qubits(1)), self.fresh(Type::qubits(n - 1)));
                let dynamic = self.fresh(Type::Qubit(Size::Dynamic));
                let (d, back) = (self.fresh(Type::Int), self.fresh(Type::Qubit(Size::Dynamic)));
                ops.push(Operation::new(OpKind::Alloc, vec![], vec![whole]));
                ops.push(Operation::new(OpKind::Split, vec![whole.id], vec![a, b]));
                ops.push(Operation::new(OpKind::Cast, vec![b.id], vec![dynamic]));
                ops.push(Operation::new(OpKind::Dim, vec![dynamic.id], vec![d, back]));
                scope.push(Avail { id: a.id, consumed: false, level });
            }
            1 => {
                let Some(q) = self.pick(scope, level) else { return };
                let r = self.fresh(Type::QUBIT);
                ops.push(Operation::new(OpKind::Reset, vec![q], vec![r]));
                scope.push(Avail { id: r.id, consumed: false, level });
            }
            2 => {
                let (Some(a), Some(b)) = (self.pick(scope, level), self.pick(scope, level)) else { return };
                let (x, y) = (self.fresh(Type::QUBIT), self.fresh(Type::QUBIT));
                ops.push(Operation::new(OpKind::Barrier, vec![a, b], vec![x, y]));
                scope.push(Avail { id: x.id, consumed: false, level });
                scope.push(Avail { id: y.id, consumed: false, level });
            }
            3 => {
                let Some(q) = self.pick(scope, level) else { return };
                let ang = self.fresh(Type::Angle);
                let r = self.fresh(Type::QUBIT);
                ops.push(
                    Operation::new(OpKind::ConstAngle, vec![], vec![ang]).with_attr("value", Attr::Float(self.rng.gen_range(-4.0..4.0))),
                );
                ops.push(Operation::new(OpKind::Ry, vec![q, ang.id], vec![r]));
                scope.push(Avail { id: r.id, consumed: false, level });
            }
            _ => {
                let Some(q) = self.pick(scope, level) else { return };
                let r = self.fresh(Type::QUBIT);
                let m = gates::u(self.rng.gen_range(0.0..3.0), self.rng.gen_range(-3.0..3.0), 0.25);
                ops.push(Operation::new(OpKind::Gate, vec![q], vec![r]).with_attr("matrix", Attr::Matrix(m)));
                scope.push(Avail { id: r.id, consumed: false, level });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Path-enumeration oracle for the single-use rule
// ---------------------------------------------------------------------------

/// Runs every execution path of `func` (both arms of every `scf.if`,
/// 0, 1 and 2 iterations of every `scf.for`) with token-instance
/// semantics: each definition, block argument and yielded result is a new
/// token, and consuming a token twice on one path is a violation.
pub fn path_oracle_violates(func: &Function) -> bool {
    let types = func.value_types();
    let mut work: Vec<Item> = Vec::new();
    push_region_ops(&func.body.blocks[0].ops, &mut work);
    let mut st = PathState::default();
    for a in &func.body.blocks[0].args {
        st.define(a.id);
    }
    explore(work, st, &types)
}

#[derive(Clone)]
enum Item<'a> {
    Op(&'a Operation),
    /// Define fresh tokens for the results of a structured op.
    Results(&'a Operation),
    /// Bind fresh tokens for a loop body's arguments.
    LoopArgs(&'a Block),
}

#[derive(Clone, Default)]
struct PathState {
    next: u64,
    token: BTreeMap<ValueId, u64>,
    consumed: HashSet<u64>,
}

impl PathState {
    fn define(&mut self, v: ValueId) {
        self.next += 1;
        self.token.insert(v, self.next);
    }

    /// Returns false on a double use.
    fn consume(&mut self, v: ValueId) -> bool {
        match self.token.get(&v) {
            Some(t) => self.consumed.insert(*t),
            None => true,
        }
    }
}

/// Pushes `ops` so that they pop in program order.
fn push_region_ops<'a>(ops: &'a [Operation], work: &mut Vec<Item<'a>>) {
    for op in ops.iter().rev() {
        work.push(Item::Op(op));
    }
}

fn explore<'a>(mut work: Vec<Item<'a>>, mut st: PathState, types: &BTreeMap<ValueId, Type>) -> bool {
    while let Some(item) = work.pop() {
        match item {
            Item::Results(op) => {
                for r in &op.results {
                    st.define(r.id);
                }
            }
            Item::LoopArgs(block) => {
                for a in &block.args {
                    st.define(a.id);
                }
            }
            Item::Op(op) => {
                let qubit_uses: Vec<ValueId> = op
                    .all_uses()
                    .filter(|v| types.get(v).is_some_and(|t| t.is_qubit()))
                    .collect();
                for v in &qubit_uses {
                    if !st.consume(*v) {
                        return true;
                    }
                }
                match op.kind {
                    OpKind::ScfIf => {
                        for r in &op.regions {
                            let mut w = work.clone();
                            w.push(Item::Results(op));
                            push_region_ops(&r.blocks[0].ops, &mut w);
                            if explore(w, st.clone(), types) {
                                return true;
                            }
                        }
                        return false;
                    }
                    OpKind::ScfFor => {
                        let body = &op.regions[0].blocks[0];
                        for trips in 0..=2 {
                            let mut w = work.clone();
                            w.push(Item::Results(op));
                            for _ in 0..trips {
                                push_region_ops(&body.ops, &mut w);
                                w.push(Item::LoopArgs(body));
                            }
                            if explore(w, st.clone(), types) {
                                return true;
                            }
                        }
                        return false;
                    }
                    _ => {
                        for r in &op.results {
                            st.define(r.id);
                        }
                    }
                }
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Hand-labelled verifier cases
// ---------------------------------------------------------------------------

/// `(name, IR text, has a single-use violation)`.
pub fn adversarial_cases() -> Vec<(&'static str, String, bool)> {
    fn main(body: &str) -> String {
        format!("module {{\n  func @main : () -> () {{\n  ^bb0:\n{body}  }}\n}}\n")
    }
    const RET: &str = "    return : () -> ()\n";
    let c = |body: &str| main(&format!("{body}{RET}"));
    let cond = "    %c0 = arith.const_int {value = 0} : () -> (i64)\n    %c1 = arith.const_int {value = 1} : () -> (i64)\n    %b = arith.cmpi %c0, %c1 {predicate = 0} : (i64, i64) -> (i1)\n";
    let cond = cond.replace("%c0", "%90").replace("%c1", "%91").replace("%b", "%92");
    let bounds = "    %80 = arith.const_int {value = 0} : () -> (i64)\n    %81 = arith.const_int {value = 3} : () -> (i64)\n    %82 = arith.const_int {value = 1} : () -> (i64)\n";
    vec![
        (
            "straight-line double use",
            c("    %0 = qssa.alloc : () -> (qubit<1>)\n    %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n    %2 = qssa.X %0 : (qubit<1>) -> (qubit<1>)\n"),
            true,
        ),
        (
            "same operation uses a value twice",
            c("    %0 = qssa.alloc : () -> (qubit<1>)\n    %1, %2 = qssa.CNOT %0, %0 : (qubit<1>, qubit<1>) -> (qubit<1>, qubit<1>)\n"),
            true,
        ),
        (
            "linear chain",
            c("    %0 = qssa.alloc : () -> (qubit<1>)\n    %1 = qssa.alloc : () -> (qubit<1>)\n    %2 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n    %3, %4 = qssa.CNOT %2, %1 : (qubit<1>, qubit<1>) -> (qubit<1>, qubit<1>)\n    %5, %6 = qssa.measure %3 : (qubit<1>) -> (bits<1>, qubit<1>)\n"),
            false,
        ),
        (
            "cross-block path double use",
            format!(
                "module {{\n  func @main : () -> () {{\n  ^bb0:\n    %0 = qssa.alloc : () -> (qubit<1>)\n{cond}    cf.cond_br %92 [^bb1, ^bb2] : (i1) -> ()\n  ^bb1:\n    %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n    cf.br [^bb2] : () -> ()\n  ^bb2:\n    %2 = qssa.X %0 : (qubit<1>) -> (qubit<1>)\n{RET}  }}\n}}\n"
            ),
            true,
        ),
        (
            "diamond with one use per arm",
            format!(
                "module {{\n  func @main : () -> () {{\n  ^bb0:\n    %0 = qssa.alloc : () -> (qubit<1>)\n{cond}    cf.cond_br %92 [^bb1, ^bb2] : (i1) -> ()\n  ^bb1:\n    %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n    cf.br [^bb3(%1)] : () -> ()\n  ^bb2:\n    %2 = qssa.X %0 : (qubit<1>) -> (qubit<1>)\n    cf.br [^bb3(%2)] : () -> ()\n  ^bb3(%3: qubit<1>):\n    %4 = qssa.Z %3 : (qubit<1>) -> (qubit<1>)\n{RET}  }}\n}}\n"
            ),
            false,
        ),
        (
            "use in entry block and again in a successor",
            format!(
                "module {{\n  func @main : () -> () {{\n  ^bb0:\n    %0 = qssa.alloc : () -> (qubit<1>)\n    %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n{cond}    cf.cond_br %92 [^bb1, ^bb2] : (i1) -> ()\n  ^bb1:\n    %2 = qssa.X %1 : (qubit<1>) -> (qubit<1>)\n{RET}  ^bb2:\n    %3 = qssa.Y %0 : (qubit<1>) -> (qubit<1>)\n{RET}  }}\n}}\n"
            ),
            true,
        ),
        (
            "loop body captures an outer qubit",
            c(&format!(
                "    %0 = qssa.alloc : () -> (qubit<1>)\n{bounds}    scf.for %80, %81, %82 : (i64, i64, i64) -> () {{\n    ^bb0(%10: i64):\n      %11 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n      scf.yield : () -> ()\n    }}\n"
            )),
            true,
        ),
        (
            "loop threads the qubit through iter_args",
            c(&format!(
                "    %0 = qssa.alloc : () -> (qubit<1>)\n{bounds}    %20 = scf.for %80, %81, %82, %0 : (i64, i64, i64, qubit<1>) -> (qubit<1>) {{\n    ^bb0(%10: i64, %11: qubit<1>):\n      %12 = qssa.H %11 : (qubit<1>) -> (qubit<1>)\n      scf.yield %12 : (qubit<1>) -> ()\n    }}\n    %21 = qssa.X %20 : (qubit<1>) -> (qubit<1>)\n"
            )),
            false,
        ),
        (
            "sibling branches each consume the same qubit",
            c(&format!(
                "    %0 = qssa.alloc : () -> (qubit<1>)\n{cond}    %3 = scf.if %92 : (i1) -> (qubit<1>) {{\n    ^bb0:\n      %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n      scf.yield %1 : (qubit<1>) -> ()\n    }} {{\n    ^bb0:\n      %2 = qssa.X %0 : (qubit<1>) -> (qubit<1>)\n      scf.yield %2 : (qubit<1>) -> ()\n    }}\n    %4 = qssa.Z %3 : (qubit<1>) -> (qubit<1>)\n"
            )),
            false,
        ),
        (
            "use after a branch already consumed the qubit",
            c(&format!(
                "    %0 = qssa.alloc : () -> (qubit<1>)\n{cond}    scf.if %92 : (i1) -> () {{\n    ^bb0:\n      %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n      scf.yield : () -> ()\n    }} {{\n    ^bb0:\n      scf.yield : () -> ()\n    }}\n    %2 = qssa.X %0 : (qubit<1>) -> (qubit<1>)\n"
            )),
            true,
        ),
        (
            "yield reuses a consumed value",
            c(&format!(
                "    %0 = qssa.alloc : () -> (qubit<1>)\n{cond}    %3 = scf.if %92 : (i1) -> (qubit<1>) {{\n    ^bb0:\n      %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n      %2 = qssa.X %1 : (qubit<1>) -> (qubit<1>)\n      scf.yield %1 : (qubit<1>) -> ()\n    }} {{\n    ^bb0:\n      scf.yield %0 : (qubit<1>) -> ()\n    }}\n"
            )),
            true,
        ),
        (
            "yielded outer value reused after the branch",
            c(&format!(
                "    %0 = qssa.alloc : () -> (qubit<1>)\n{cond}    %3 = scf.if %92 : (i1) -> (qubit<1>) {{\n    ^bb0:\n      %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)\n      scf.yield %1 : (qubit<1>) -> ()\n    }} {{\n    ^bb0:\n      scf.yield %0 : (qubit<1>) -> ()\n    }}\n    %4 = qssa.Z %3 : (qubit<1>) -> (qubit<1>)\n    %5 = qssa.Y %0 : (qubit<1>) -> (qubit<1>)\n"
            )),
            true,
        ),
    ]
}

/// Two-branch program whose branches both start with `H` on the same
/// qubit; the branch condition comes from measuring a rotated ancilla.
pub const HOISTABLE_BRANCHES: &str = "module {
  func @main : () -> () {
  ^bb0:
    %0 = qssa.alloc : () -> (qubit<1>)
    %1 = qssa.alloc : () -> (qubit<1>)
    %2 = mem.alloc {size = 2} : () -> (mem<2>)
    %3 = qssa.Ry %1 {angle = 1.2} : (qubit<1>) -> (qubit<1>)
    %4, %5 = qssa.measure %3 : (qubit<1>) -> (bits<1>, qubit<1>)
    mem.store %2, %4 {index = 0} : (mem<2>, bits<1>) -> ()
    %6 = mem.load %2 {index = 0} : (mem<2>) -> (i64)
    %7 = arith.const_int {value = 1} : () -> (i64)
    %8 = arith.cmpi %6, %7 {predicate = 0} : (i64, i64) -> (i1)
    %12 = scf.if %8 : (i1) -> (qubit<1>) {
    ^bb0:
      %9 = qssa.H %0 : (qubit<1>) -> (qubit<1>)
      %10 = qssa.X %9 : (qubit<1>) -> (qubit<1>)
      scf.yield %10 : (qubit<1>) -> ()
    } {
    ^bb0:
      %11 = qssa.H %0 : (qubit<1>) -> (qubit<1>)
      scf.yield %11 : (qubit<1>) -> ()
    }
    %13, %14 = qssa.measure %12 : (qubit<1>) -> (bits<1>, qubit<1>)
    mem.store %2, %13 {index = 1} : (mem<2>, bits<1>) -> ()
    return : () -> ()
  }
}
";

/// `main` applying `n` gates in one straight line over two qubits.
pub fn gate_chain(n: usize) -> Module {
    let mut next = 0u32;
    let mut fresh = || {
        next += 1;
        Value::new(ValueId(next - 1), Type::QUBIT)
    };
    let (mut a, mut b) = (fresh(), fresh());
    let mut ops = vec![
        Operation::new(OpKind::Alloc, vec![], vec![a]),
        Operation::new(OpKind::Alloc, vec![], vec![b]),
    ];
    for i in 0..n {
        if i % 4 == 3 {
            let (x, y) = (fresh(), fresh());
            ops.push(Operation::new(OpKind::CNOT, vec![a.id, b.id], vec![x, y]));
            (a, b) = (x, y);
        } else {
            let kind = [OpKind::H, OpKind::T, OpKind::S][i % 3].clone();
            let x = fresh();
            ops.push(Operation::new(kind, vec![a.id], vec![x]));
            a = x;
        }
    }
    ops.push(Operation::new(OpKind::Return, vec![a.id, b.id], vec![]));
    Module::new(vec![Function::new(
        "main",
        vec![],
        vec![Type::QUBIT; 2],
        Region::single(Block::new(vec![], ops)),
    )])
}

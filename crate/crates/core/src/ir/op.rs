use std::collections::BTreeMap;

use super::{Region, Value, ValueId};
use crate::linalg::{gates, CMatrix};

/// The closed set of operation kinds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Alloc,
    CNOT,
    X,
    Y,
    Z,
    H,
    Rx,
    Ry,
    Rz,
    S,
    Sdg,
    T,
    Tdg,
    U,
    /// Arbitrary unitary given by the `matrix` attribute.
    Gate,
    Measure,
    Split,
    Concat,
    Dim,
    Cast,
    Barrier,
    Reset,
    Call(String),
    Return,
    ScfIf,
    ScfFor,
    Yield,
    ConstInt,
    ConstAngle,
    AddI,
    SubI,
    MulI,
    CmpI,
    MemAllocBit,
    MemStoreBit,
    MemLoadBit,
    Br,
    CondBr,
}

/// Side-effect class of an operation kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Effect {
    Pure,
    /// Acquires a fresh resource without touching existing state.
    Resource,
    /// Probabilistic, collapses quantum state.
    Observable,
    /// Reads or writes classical bit memory.
    Memory,
    /// Optimization fence.
    Fence,
}

/// Integer comparison predicates for `arith.cmpi`, stored as the `predicate` attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpPredicate {
    Eq = 0,
    Ne = 1,
    Slt = 2,
    Sle = 3,
    Sgt = 4,
    Sge = 5,
}

impl CmpPredicate {
    pub fn from_i64(v: i64) -> Option<Self> {
        use CmpPredicate::*;
        Some(match v {
            0 => Eq,
            1 => Ne,
            2 => Slt,
            3 => Sle,
            4 => Sgt,
            5 => Sge,
            _ => return None,
        })
    }

    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpPredicate::Eq => a == b,
            CmpPredicate::Ne => a != b,
            CmpPredicate::Slt => a < b,
            CmpPredicate::Sle => a <= b,
            CmpPredicate::Sgt => a > b,
            CmpPredicate::Sge => a >= b,
        }
    }
}

const NAMED: &[(&str, OpKind)] = &[
    ("qssa.alloc", OpKind::Alloc),
    ("qssa.CNOT", OpKind::CNOT),
    ("qssa.X", OpKind::X),
    ("qssa.Y", OpKind::Y),
    ("qssa.Z", OpKind::Z),
    ("qssa.H", OpKind::H),
    ("qssa.Rx", OpKind::Rx),
    ("qssa.Ry", OpKind::Ry),
    ("qssa.Rz", OpKind::Rz),
    ("qssa.S", OpKind::S),
    ("qssa.Sdg", OpKind::Sdg),
    ("qssa.T", OpKind::T),
    ("qssa.Tdg", OpKind::Tdg),
    ("qssa.U", OpKind::U),
    ("qssa.gate", OpKind::Gate),
    ("qssa.measure", OpKind::Measure),
    ("qssa.split", OpKind::Split),
    ("qssa.concat", OpKind::Concat),
    ("qssa.dim", OpKind::Dim),
    ("qssa.cast", OpKind::Cast),
    ("qssa.barrier", OpKind::Barrier),
    ("qssa.reset", OpKind::Reset),
    ("return", OpKind::Return),
    ("scf.if", OpKind::ScfIf),
    ("scf.for", OpKind::ScfFor),
    ("scf.yield", OpKind::Yield),
    ("arith.const_int", OpKind::ConstInt),
    ("arith.const_angle", OpKind::ConstAngle),
    ("arith.addi", OpKind::AddI),
    ("arith.subi", OpKind::SubI),
    ("arith.muli", OpKind::MulI),
    ("arith.cmpi", OpKind::CmpI),
    ("mem.alloc", OpKind::MemAllocBit),
    ("mem.store", OpKind::MemStoreBit),
    ("mem.load", OpKind::MemLoadBit),
    ("cf.br", OpKind::Br),
    ("cf.cond_br", OpKind::CondBr),
];

impl OpKind {
    /// Textual mnemonic; `call` ops print their callee separately.
    pub fn name(&self) -> &'static str {
        if let OpKind::Call(_) = self {
            return "call";
        }
        NAMED
            .iter()
            .find(|(_, k)| k == self)
            .map(|(n, _)| *n)
            .expect("every non-call kind has a name")
    }

    pub fn from_name(name: &str) -> Option<OpKind> {
        NAMED.iter().find(|(n, _)| *n == name).map(|(_, k)| k.clone())
    }

    pub fn effect(&self) -> Effect {
        use OpKind::*;
        match self {
            Alloc | MemAllocBit => Effect::Resource,
            Measure | Reset => Effect::Observable,
            MemStoreBit | MemLoadBit => Effect::Memory,
            Barrier => Effect::Fence,
            _ => Effect::Pure,
        }
    }

    pub fn is_terminator(&self) -> bool {
        matches!(self, OpKind::Return | OpKind::Yield | OpKind::Br | OpKind::CondBr)
    }

    /// Unitary gate kinds.
    pub fn is_gate(&self) -> bool {
        use OpKind::*;
        matches!(self, CNOT | X | Y | Z | H | Rx | Ry | Rz | S | Sdg | T | Tdg | U | Gate)
    }

    pub fn is_single_qubit_gate(&self) -> bool {
        self.is_gate() && !matches!(self, OpKind::CNOT | OpKind::Gate)
    }

    /// Number of angle parameters a single-qubit gate takes.
    pub fn angle_count(&self) -> usize {
        match self {
            OpKind::Rx | OpKind::Ry | OpKind::Rz => 1,
            OpKind::U => 3,
            _ => 0,
        }
    }

    /// Attribute names carrying the angles when given statically.
    pub fn angle_attr_names(&self) -> &'static [&'static str] {
        match self {
            OpKind::Rx | OpKind::Ry | OpKind::Rz => &["angle"],
            OpKind::U => &["theta", "phi", "lambda"],
            _ => &[],
        }
    }

    /// Counted by circuit metrics: gates, measurement and reset.
    pub fn is_counted(&self) -> bool {
        self.is_gate() || matches!(self, OpKind::Measure | OpKind::Reset)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Attr {
    Float(f64),
    Int(i64),
    Matrix(CMatrix),
}

impl Attr {
    pub fn as_float(&self) -> Option<f64> {
        match self {
            Attr::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Attr::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&CMatrix> {
        match self {
            Attr::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

pub type Attrs = BTreeMap<String, Attr>;

/// Branch target of a `cf.br` / `cf.cond_br`, by block index within the region.
#[derive(Clone, Debug, PartialEq)]
pub struct Successor {
    pub block: usize,
    pub args: Vec<ValueId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operation {
    pub kind: OpKind,
    pub operands: Vec<ValueId>,
    pub results: Vec<Value>,
    pub attrs: Attrs,
    pub regions: Vec<Region>,
    pub successors: Vec<Successor>,
}

impl Operation {
    pub fn new(kind: OpKind, operands: Vec<ValueId>, results: Vec<Value>) -> Self {
        Operation {
            kind,
            operands,
            results,
            attrs: Attrs::new(),
            regions: Vec::new(),
            successors: Vec::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, attr: Attr) -> Self {
        self.attrs.insert(name.to_string(), attr);
        self
    }

    pub fn with_regions(mut self, regions: Vec<Region>) -> Self {
        self.regions = regions;
        self
    }

    pub fn with_successors(mut self, successors: Vec<Successor>) -> Self {
        self.successors = successors;
        self
    }

    pub fn attr_float(&self, name: &str) -> Option<f64> {
        self.attrs.get(name).and_then(Attr::as_float)
    }

    pub fn attr_int(&self, name: &str) -> Option<i64> {
        self.attrs.get(name).and_then(Attr::as_int)
    }

    pub fn result_ids(&self) -> impl Iterator<Item = ValueId> + '_ {
        self.results.iter().map(|v| v.id)
    }

    /// All used values: operands followed by successor arguments.
    pub fn all_uses(&self) -> impl Iterator<Item = ValueId> + '_ {
        self.operands
            .iter()
            .copied()
            .chain(self.successors.iter().flat_map(|s| s.args.iter().copied()))
    }

    pub fn for_each_use_mut(&mut self, mut f: impl FnMut(&mut ValueId)) {
        self.operands.iter_mut().for_each(&mut f);
        for s in &mut self.successors {
            s.args.iter_mut().for_each(&mut f);
        }
    }

    /// Angles of a rotation or `U` gate, when given as attributes.
    pub fn static_angles(&self) -> Option<Vec<f64>> {
        self.kind
            .angle_attr_names()
            .iter()
            .map(|n| self.attr_float(n))
            .collect()
    }

    /// Number of leading operands that are qubits for gate kinds (rotation
    /// angles may follow as `f64` operands).
    pub fn gate_qubit_operands(&self) -> &[ValueId] {
        let n = match self.kind {
            OpKind::CNOT => 2,
            OpKind::Gate => self.operands.len(),
            OpKind::Rx | OpKind::Ry | OpKind::Rz | OpKind::U => {
                if self.static_angles().is_some() {
                    self.operands.len()
                } else {
                    self.operands.len().saturating_sub(self.kind.angle_count())
                }
            }
            _ => self.operands.len().min(1),
        };
        &self.operands[..n.min(self.operands.len())]
    }

    /// Unitary of a gate op whose parameters are all static.
    pub fn gate_matrix(&self) -> Option<CMatrix> {
        gate_matrix(&self.kind, &self.static_angles()?, self.attrs.get("matrix"))
    }
}

/// Unitary of a gate kind with the given angles.
pub fn gate_matrix(kind: &OpKind, angles: &[f64], matrix: Option<&Attr>) -> Option<CMatrix> {
    Some(match kind {
        OpKind::CNOT => gates::cnot(),
        OpKind::X => gates::x(),
        OpKind::Y => gates::y(),
        OpKind::Z => gates::z(),
        OpKind::H => gates::h(),
        OpKind::S => gates::s(),
        OpKind::Sdg => gates::sdg(),
        OpKind::T => gates::t(),
        OpKind::Tdg => gates::tdg(),
        OpKind::Rx => gates::rx(*angles.first()?),
        OpKind::Ry => gates::ry(*angles.first()?),
        OpKind::Rz => gates::rz(*angles.first()?),
        OpKind::U => match angles {
            [t, p, l] => gates::u(*t, *p, *l),
            _ => return None,
        },
        OpKind::Gate => matrix?.as_matrix()?.clone(),
        _ => return None,
    })
}

//! Direct execution of the QASM AST. Library and user gates are expanded
//! through their definitions down to `U` and `CX`, so this path shares no
//! gate mapping with the raiser.

use std::collections::HashMap;

use super::{explore, Brancher, Distribution, SimError, Statevector, MAX_DIST_QUBITS, MAX_UNITARY_QUBITS};
use crate::linalg::{gates, CMatrix};
use crate::qasm::{qelib, GateBodyStmt, QasmProgram, QasmStmt, RegRef};

const MAX_EXPANSION_DEPTH: usize = 64;

/// Exact outcome distribution of a QASM program, keyed by the classical
/// registers in declaration order (each printed highest bit first).
pub fn run_qasm_distribution(prog: &QasmProgram) -> Result<Distribution, SimError> {
    let layout = Layout::new(prog)?;
    if layout.nqubits > MAX_DIST_QUBITS {
        return Err(SimError::TooLarge(format!("{} qubits (limit {MAX_DIST_QUBITS})", layout.nqubits)));
    }
    explore(|b| {
        let mut ex = Exec {
            prog,
            layout: &layout,
            q: Target::Sv(Statevector::zero(layout.nqubits)?, b),
            cregs: layout.cregs.iter().map(|(_, n)| vec![false; *n as usize]).collect(),
        };
        ex.run()?;
        let regs: Vec<String> = ex
            .cregs
            .iter()
            .map(|bits| bits.iter().rev().map(|b| if *b { '1' } else { '0' }).collect())
            .collect();
        Ok(regs.join(" "))
    })
}

/// Unitary of a measurement-free program over all declared qubits
/// (declaration order, first qubit least significant).
pub fn qasm_circuit_unitary(prog: &QasmProgram) -> Result<CMatrix, SimError> {
    let layout = Layout::new(prog)?;
    let n = layout.nqubits;
    if n > MAX_UNITARY_QUBITS {
        return Err(SimError::TooLarge(format!("{n} qubits (unitary limit {MAX_UNITARY_QUBITS})")));
    }
    let cols = (0..1usize << n).map(|j| Statevector::basis(n, j)).collect::<Result<Vec<_>, _>>()?;
    let mut ex = Exec {
        prog,
        layout: &layout,
        q: Target::Cols(cols),
        cregs: layout.cregs.iter().map(|(_, n)| vec![false; *n as usize]).collect(),
    };
    ex.run()?;
    let Target::Cols(cols) = ex.q else { unreachable!() };
    Ok(columns_to_matrix(&cols))
}

/// Unitary of a named gate (library or defined in `prog`) applied to wires
/// in argument order; the first argument is the matrix MSB.
pub fn gate_unitary(prog: Option<&QasmProgram>, name: &str, params: &[f64]) -> Result<CMatrix, SimError> {
    let empty = QasmProgram::new(Vec::new());
    let prog = prog.unwrap_or(&empty);
    let arity = match name {
        "U" => 1,
        "CX" => 2,
        _ => lookup(prog, name).map(|g| g.qargs.len()).ok_or_else(|| SimError::Unsupported(format!("unknown gate `{name}`")))?,
    };
    let layout = Layout { qregs: HashMap::new(), cregs: Vec::new(), nqubits: arity };
    let cols = (0..1usize << arity).map(|j| Statevector::basis(arity, j)).collect::<Result<Vec<_>, _>>()?;
    let mut ex = Exec { prog, layout: &layout, q: Target::Cols(cols), cregs: Vec::new() };
    // Argument 0 is the MSB, i.e. the highest statevector qubit.
    let wires: Vec<usize> = (0..arity).rev().collect();
    ex.apply_named(name, params, &wires, 0)?;
    let Target::Cols(cols) = ex.q else { unreachable!() };
    Ok(columns_to_matrix(&cols))
}

fn columns_to_matrix(cols: &[Statevector]) -> CMatrix {
    let mut u = CMatrix::zeros(cols.len());
    for (j, col) in cols.iter().enumerate() {
        for (i, a) in col.amplitudes().iter().enumerate() {
            u.set(i, j, *a);
        }
    }
    u
}

fn lookup<'p>(prog: &'p QasmProgram, name: &str) -> Option<&'p crate::qasm::GateDef> {
    prog.user_gate(name).or_else(|| qelib::lookup(name))
}

struct Layout {
    qregs: HashMap<String, usize>,
    cregs: Vec<(String, u32)>,
    nqubits: usize,
}

impl Layout {
    fn new(prog: &QasmProgram) -> Result<Self, SimError> {
        let mut qregs = HashMap::new();
        let mut n = 0usize;
        for (name, size) in prog.qregs() {
            qregs.insert(name.to_string(), n);
            n += size as usize;
        }
        let cregs = prog.cregs().map(|(n, s)| (n.to_string(), s)).collect();
        Ok(Layout { qregs, cregs, nqubits: n })
    }

    fn qubit(&self, r: &RegRef) -> Result<usize, SimError> {
        self.qregs
            .get(&r.reg)
            .map(|off| off + r.index as usize)
            .ok_or_else(|| SimError::Runtime(format!("unknown quantum register `{}`", r.reg)))
    }

    fn creg(&self, name: &str) -> Result<usize, SimError> {
        self.cregs
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| SimError::Runtime(format!("unknown classical register `{name}`")))
    }
}

enum Target<'b, 's> {
    Sv(Statevector, &'b mut Brancher<'s>),
    Cols(Vec<Statevector>),
}

struct Exec<'p, 'b, 's> {
    prog: &'p QasmProgram,
    layout: &'p Layout,
    q: Target<'b, 's>,
    cregs: Vec<Vec<bool>>,
}

impl Exec<'_, '_, '_> {
    fn run(&mut self) -> Result<(), SimError> {
        for s in &self.prog.statements {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn apply(&mut self, m: &CMatrix, targets: &[usize]) -> Result<(), SimError> {
        match &mut self.q {
            Target::Sv(sv, _) => sv.apply_matrix(m, targets),
            Target::Cols(cols) => cols.iter_mut().try_for_each(|c| c.apply_matrix(m, targets)),
        }
    }

    fn measure(&mut self, q: usize) -> Result<bool, SimError> {
        match &mut self.q {
            Target::Sv(sv, b) => Ok(b.measure(sv, q)),
            Target::Cols(_) => Err(SimError::HasMeasurement),
        }
    }

    fn stmt(&mut self, s: &QasmStmt) -> Result<(), SimError> {
        match s {
            QasmStmt::QregDecl { .. }
            | QasmStmt::CregDecl { .. }
            | QasmStmt::GateDef(_)
            | QasmStmt::OpaqueDecl { .. }
            | QasmStmt::Barrier { .. } => {}
            QasmStmt::GateApply(g) => {
                let params: Vec<f64> = g
                    .params
                    .iter()
                    .map(|e| e.eval_const().ok_or_else(|| SimError::Runtime("non-constant parameter".into())))
                    .collect::<Result<_, _>>()?;
                let wires: Vec<usize> = g.qubits.iter().map(|r| self.layout.qubit(r)).collect::<Result<_, _>>()?;
                self.apply_named(&g.name, &params, &wires, 0)?;
            }
            QasmStmt::Measure { qubit, bit } => {
                let q = self.layout.qubit(qubit)?;
                let c = self.layout.creg(&bit.reg)?;
                let outcome = self.measure(q)?;
                self.cregs[c][bit.index as usize] = outcome;
            }
            QasmStmt::Reset { qubit } => {
                let q = self.layout.qubit(qubit)?;
                if self.measure(q)? {
                    self.apply(&gates::x(), &[q])?;
                }
            }
            QasmStmt::If { creg, value, body } => {
                let c = self.layout.creg(creg)?;
                let reg_value = self.cregs[c]
                    .iter()
                    .enumerate()
                    .fold(0u128, |acc, (i, b)| acc | ((*b as u128) << i));
                if reg_value == *value as u128 {
                    self.stmt(body)?;
                }
            }
        }
        Ok(())
    }

    fn apply_named(&mut self, name: &str, params: &[f64], wires: &[usize], depth: usize) -> Result<(), SimError> {
        if depth > MAX_EXPANSION_DEPTH {
            return Err(SimError::Runtime(format!("gate `{name}` expands too deeply")));
        }
        match name {
            "U" => {
                let [t, p, l] = params else {
                    return Err(SimError::Runtime("U takes three parameters".into()));
                };
                return self.apply(&gates::u(*t, *p, *l), wires);
            }
            "CX" => return self.apply(&gates::cnot(), wires),
            _ => {}
        }
        if self.prog.is_opaque(name) && self.prog.user_gate(name).is_none() {
            return Err(SimError::Unsupported(format!("opaque gate `{name}` has no definition")));
        }
        let def = lookup(self.prog, name).ok_or_else(|| SimError::Unsupported(format!("unknown gate `{name}`")))?;
        if def.params.len() != params.len() || def.qargs.len() != wires.len() {
            return Err(SimError::Runtime(format!("gate `{name}` applied with the wrong arity")));
        }
        for stmt in &def.body {
            let GateBodyStmt::Apply { name: inner, params: exprs, args } = stmt else {
                continue;
            };
            let values: Vec<f64> = exprs
                .iter()
                .map(|e| {
                    e.eval_bound(&def.params, params)
                        .map_err(|p| SimError::Runtime(format!("unbound parameter `{p}` in gate `{name}`")))
                })
                .collect::<Result<_, _>>()?;
            let inner_wires: Vec<usize> = args
                .iter()
                .map(|a| {
                    let i = def.qargs.iter().position(|q| q == a).expect("parser checked gate arguments");
                    wires[i]
                })
                .collect();
            self.apply_named(inner, &values, &inner_wires, depth + 1)?;
        }
        Ok(())
    }
}

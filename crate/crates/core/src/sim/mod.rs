//! Reference statevector simulator.
//!
//! This is the correctness oracle for every transformation in the crate.
//! Distributions are computed exactly: every measurement with two possible
//! outcomes forks the execution, and both forks are followed to the end of
//! the program. There is no sampling.
//!
//! Qubit `k` of a [`Statevector`] is bit `k` of the amplitude index (qubit
//! 0 is the least significant).

mod interp;
mod qasm_exec;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ir::OpKind;
use crate::linalg::{equal_up_to_phase, CMatrix, C64, ONE, ZERO};

pub use interp::{circuit_unitary, run_distribution};
pub use qasm_exec::{gate_unitary, qasm_circuit_unitary, run_qasm_distribution};

/// Largest statevector the simulator will build.
pub const MAX_QUBITS: usize = 14;
/// Qubit limit for [`run_distribution`].
pub const MAX_DIST_QUBITS: usize = 12;
/// Measured-bit limit per execution path for [`run_distribution`].
pub const MAX_MEASURED_BITS: usize = 20;
/// Qubit limit for [`circuit_unitary`].
pub const MAX_UNITARY_QUBITS: usize = 10;
/// Branches whose probability falls below this are dropped.
pub const PRUNE_PROBABILITY: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("too large to simulate: {0}")]
    TooLarge(String),
    #[error("bad gate target: {0}")]
    BadTarget(String),
    #[error("circuit contains a measurement or reset")]
    HasMeasurement,
    #[error("matrix shapes differ ({0} vs {1})")]
    ShapeMismatch(usize, usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// The all-zeros state on `n` qubits.
    pub fn zero(n: usize) -> Result<Self, SimError> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self, SimError> {
        if n > MAX_QUBITS {
            return Err(SimError::TooLarge(format!("{n} qubits (limit {MAX_QUBITS})")));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(Statevector { n, amps })
    }

    /// Wraps an amplitude vector whose length is a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, SimError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(SimError::BadTarget(format!("{len} amplitudes is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(SimError::TooLarge(format!("{n} qubits (limit {MAX_QUBITS})")));
        }
        Ok(Statevector { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Appends a fresh qubit in `|0⟩` and returns its index.
    pub fn add_qubit(&mut self) -> Result<usize, SimError> {
        if self.n + 1 > MAX_QUBITS {
            return Err(SimError::TooLarge(format!("more than {MAX_QUBITS} qubits")));
        }
        self.amps.resize(self.amps.len() * 2, ZERO);
        self.n += 1;
        Ok(self.n - 1)
    }

    /// Applies `m` to `targets`; `targets[0]` is the most significant bit of
    /// the matrix index.
    pub fn apply_matrix(&mut self, m: &CMatrix, targets: &[usize]) -> Result<(), SimError> {
        let k = targets.len();
        if m.dim() != 1 << k {
            return Err(SimError::BadTarget(format!(
                "{}x{} matrix applied to {k} qubit(s)",
                m.dim(),
                m.dim()
            )));
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n {
                return Err(SimError::BadTarget(format!("qubit {t} out of range ({} qubits)", self.n)));
            }
            if targets[..i].contains(&t) {
                return Err(SimError::BadTarget(format!("qubit {t} targeted twice")));
            }
        }
        let dim = 1usize << k;
        // offsets[j] = amplitude offset for sub-index j.
        let offsets: Vec<usize> = (0..dim)
            .map(|j| {
                (0..k)
                    .filter(|t| j >> (k - 1 - t) & 1 == 1)
                    .map(|t| 1usize << targets[t])
                    .sum()
            })
            .collect();
        let mask: usize = targets.iter().map(|t| 1usize << t).sum();
        let mut inp = vec![ZERO; dim];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for j in 0..dim {
                inp[j] = self.amps[base + offsets[j]];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, x) in inp.iter().enumerate() {
                    acc += m.get(r, c) * x;
                }
                self.amps[base + off] = acc;
            }
        }
        Ok(())
    }

    /// Probability that measuring `q` yields 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects qubit `q` onto `outcome` and renormalizes. Returns the
    /// probability of that outcome.
    pub fn collapse(&mut self, q: usize, outcome: bool) -> f64 {
        let bit = 1usize << q;
        let p = if outcome { self.prob_one(q) } else { 1.0 - self.prob_one(q) };
        let scale = if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 };
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
        p
    }
}

/// Applies a gate kind to a copy of `state`. `matrix` is only consulted for
/// [`OpKind::Gate`].
pub fn apply_gate(
    state: &Statevector,
    kind: &OpKind,
    angles: &[f64],
    targets: &[usize],
    matrix: Option<&CMatrix>,
) -> Result<Statevector, SimError> {
    let attr = matrix.map(|m| crate::ir::Attr::Matrix(m.clone()));
    let m = crate::ir::gate_matrix(kind, angles, attr.as_ref())
        .ok_or_else(|| SimError::Unsupported(format!("`{}` with {} angle(s) is not a gate", kind.name(), angles.len())))?;
    let mut out = state.clone();
    out.apply_matrix(&m, targets)?;
    Ok(out)
}

/// Exact outcome distribution: bitstring key → probability.
///
/// Keys list the classical memories in allocation order, separated by
/// spaces, each printed with its highest bit first. Programs without
/// classical memory are keyed by their measurement outcomes in execution
/// order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Distribution {
    pub outcomes: BTreeMap<String, f64>,
}

impl Distribution {
    pub fn add(&mut self, key: String, p: f64) {
        *self.outcomes.entry(key).or_insert(0.0) += p;
    }

    pub fn get(&self, key: &str) -> f64 {
        self.outcomes.get(key).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.outcomes.values().sum()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Total-variation distance, `½ Σ |p(x) − q(x)|`.
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        let keys: std::collections::BTreeSet<&String> = self.outcomes.keys().chain(other.outcomes.keys()).collect();
        0.5 * keys.into_iter().map(|k| (self.get(k) - other.get(k)).abs()).sum::<f64>()
    }

    /// Sorted `bitstring probability` lines.
    pub fn to_lines(&self) -> String {
        self.outcomes.iter().map(|(k, p)| format!("{k} {p:.12}\n")).collect()
    }
}

/// True iff some unit complex `c` gives `‖a − c·b‖_max ≤ tol`.
pub fn equiv_up_to_global_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool, SimError> {
    if a.dim() != b.dim() {
        return Err(SimError::ShapeMismatch(a.dim(), b.dim()));
    }
    Ok(equal_up_to_phase(a, b, tol))
}

/// Tracks forced outcomes for one replayed execution path and records the
/// untaken alternatives.
pub(crate) struct Brancher<'s> {
    script: &'s [bool],
    pub choices: Vec<bool>,
    pub alternatives: Vec<Vec<bool>>,
    pub prob: f64,
}

impl<'s> Brancher<'s> {
    pub fn new(script: &'s [bool]) -> Self {
        Brancher {
            script,
            choices: Vec::new(),
            alternatives: Vec::new(),
            prob: 1.0,
        }
    }

    /// Measures `q`, choosing the outcome from the script or defaulting to
    /// the first viable outcome.
    pub fn measure(&mut self, sv: &mut Statevector, q: usize) -> bool {
        let p1 = sv.prob_one(q).clamp(0.0, 1.0);
        let p0 = 1.0 - p1;
        let outcome = if p0 <= PRUNE_PROBABILITY {
            true
        } else if p1 <= PRUNE_PROBABILITY {
            false
        } else {
            let pos = self.choices.len();
            if pos < self.script.len() {
                self.script[pos]
            } else {
                let mut alt = self.choices.clone();
                alt.push(true);
                self.alternatives.push(alt);
                false
            }
        };
        self.choices.push(outcome);
        self.prob *= if outcome { p1 } else { p0 };
        sv.collapse(q, outcome);
        outcome
    }
}

/// Runs `path` for every branch script until all alternatives are explored.
pub(crate) fn explore(
    mut path: impl FnMut(&mut Brancher) -> Result<String, SimError>,
) -> Result<Distribution, SimError> {
    const MAX_PATHS: usize = 1 << 20;
    let mut dist = Distribution::default();
    let mut work: Vec<Vec<bool>> = vec![Vec::new()];
    let mut paths = 0usize;
    while let Some(script) = work.pop() {
        paths += 1;
        if paths > MAX_PATHS {
            return Err(SimError::TooLarge(format!("more than {MAX_PATHS} execution paths")));
        }
        let mut b = Brancher::new(&script);
        let key = path(&mut b)?;
        dist.add(key, b.prob);
        // Reverse so the earliest alternative is explored first.
        work.extend(b.alternatives.into_iter().rev());
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gates;

    #[test]
    fn x_flips_and_h_superposes() {
        let s = Statevector::zero(1).unwrap();
        let x = apply_gate(&s, &OpKind::X, &[], &[0], None).unwrap();
        assert_eq!(x.amplitudes(), &[ZERO, ONE]);
        let h = apply_gate(&s, &OpKind::H, &[], &[0], None).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h.amplitudes()[0].re - r).abs() < 1e-15 && (h.amplitudes()[1].re - r).abs() < 1e-15);
    }

    #[test]
    fn first_target_is_matrix_msb() {
        // CNOT with control on qubit 1: |q1=1, q0=0> = index 2 -> index 3.
        let s = Statevector::basis(2, 2).unwrap();
        let out = apply_gate(&s, &OpKind::CNOT, &[], &[1, 0], None).unwrap();
        assert_eq!(out.amplitudes()[3], ONE);
        let out = apply_gate(&s, &OpKind::CNOT, &[], &[0, 1], None).unwrap();
        assert_eq!(out.amplitudes()[2], ONE);
    }

    #[test]
    fn rejects_bad_targets() {
        let s = Statevector::zero(2).unwrap();
        assert!(matches!(apply_gate(&s, &OpKind::CNOT, &[], &[0, 0], None), Err(SimError::BadTarget(_))));
        assert!(matches!(apply_gate(&s, &OpKind::X, &[], &[2], None), Err(SimError::BadTarget(_))));
        assert!(matches!(Statevector::zero(MAX_QUBITS + 1), Err(SimError::TooLarge(_))));
    }

    #[test]
    fn phase_equivalence() {
        let id = CMatrix::identity(2);
        assert!(equiv_up_to_global_phase(&id, &id.scale(crate::linalg::I), 1e-9).unwrap());
        assert!(!equiv_up_to_global_phase(&gates::x(), &gates::z(), 1e-9).unwrap());
        assert!(matches!(
            equiv_up_to_global_phase(&id, &CMatrix::identity(4), 1e-9),
            Err(SimError::ShapeMismatch(2, 4))
        ));
    }
}

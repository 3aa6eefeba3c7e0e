//! Every library gate, expanded through its `U`/`CX` definition, equals the
//! textbook matrix up to global phase.

use std::f64::consts::PI;

use qssa::linalg::{equal_up_to_phase, gates, CMatrix, C64, I, ONE, ZERO};
use qssa::qasm::qelib;
use qssa::sim::gate_unitary;

const TOL: f64 = 1e-9;

fn controlled(v: &CMatrix) -> CMatrix {
    let d = v.dim();
    let mut m = CMatrix::identity(2 * d);
    for r in 0..d {
        for c in 0..d {
            m.set(d + r, d + c, v.get(r, c));
        }
    }
    m
}

fn permutation(n: usize, map: &[(usize, usize)]) -> CMatrix {
    let mut m = CMatrix::identity(n);
    for &(a, b) in map {
        m.set(a, a, ZERO);
        m.set(a, b, ONE);
    }
    m
}

fn expm_pauli_pair(theta: f64, p: &CMatrix) -> CMatrix {
    // exp(-iθ/2 P⊗P) = cos(θ/2) I − i sin(θ/2) P⊗P
    let pp = p.kron(p);
    let (s, c) = (theta / 2.0).sin_cos();
    let mut m = CMatrix::identity(4).scale(C64::new(c, 0.0));
    for r in 0..4 {
        for k in 0..4 {
            m.set(r, k, m.get(r, k) - I * s * pp.get(r, k));
        }
    }
    m
}

fn check(name: &str, params: &[f64], expected: CMatrix) {
    let got = gate_unitary(None, name, params).unwrap();
    assert!(
        equal_up_to_phase(&got, &expected, TOL),
        "{name}{params:?}\n got {got:?}\n expected {expected:?}"
    );
}

#[test]
fn single_qubit_library_gates() {
    let (a, b, c) = (0.37, -1.21, 2.5);
    check("x", &[], gates::x());
    check("y", &[], gates::y());
    check("z", &[], gates::z());
    check("h", &[], gates::h());
    check("s", &[], gates::s());
    check("sdg", &[], gates::sdg());
    check("t", &[], gates::t());
    check("tdg", &[], gates::tdg());
    check("id", &[], CMatrix::identity(2));
    check("u0", &[a], CMatrix::identity(2));
    check("rx", &[a], gates::rx(a));
    check("ry", &[a], gates::ry(a));
    check("rz", &[a], gates::rz(a));
    check("u1", &[a], gates::phase(a));
    check("p", &[a], gates::phase(a));
    check("u2", &[b, c], gates::u(PI / 2.0, b, c));
    check("u3", &[a, b, c], gates::u(a, b, c));
    check("u", &[a, b, c], gates::u(a, b, c));
    let sx = CMatrix::from_rows(vec![
        vec![C64::new(0.5, 0.5), C64::new(0.5, -0.5)],
        vec![C64::new(0.5, -0.5), C64::new(0.5, 0.5)],
    ]);
    check("sx", &[], sx.clone());
    check("sxdg", &[], sx.adjoint());
}

#[test]
fn two_and_three_qubit_library_gates() {
    let (a, b, c) = (0.81, 0.29, -2.2);
    check("cx", &[], gates::cnot());
    check("CX", &[], gates::cnot());
    check("cz", &[], controlled(&gates::z()));
    check("cy", &[], controlled(&gates::y()));
    check("ch", &[], controlled(&gates::h()));
    check("swap", &[], permutation(4, &[(1, 2), (2, 1)]));
    check("crx", &[a], controlled(&gates::rx(a)));
    check("cry", &[a], controlled(&gates::ry(a)));
    check("crz", &[a], controlled(&gates::rz(a)));
    check("cu1", &[a], controlled(&gates::phase(a)));
    check("cp", &[a], controlled(&gates::phase(a)));
    check("cu3", &[a, b, c], controlled(&gates::u(a, b, c)));
    let sx = CMatrix::from_rows(vec![
        vec![C64::new(0.5, 0.5), C64::new(0.5, -0.5)],
        vec![C64::new(0.5, -0.5), C64::new(0.5, 0.5)],
    ]);
    check("csx", &[], controlled(&sx));
    check("rzz", &[a], expm_pauli_pair(a, &gates::z()));
    check("rxx", &[a], expm_pauli_pair(a, &gates::x()));
    check("ccx", &[], permutation(8, &[(6, 7), (7, 6)]));
    check("cswap", &[], permutation(8, &[(5, 6), (6, 5)]));
}

#[test]
fn every_library_gate_is_unitary() {
    for g in qelib::library() {
        let params = vec![0.3; g.params.len()];
        let m = gate_unitary(None, &g.name, &params).unwrap();
        assert!(m.is_unitary(TOL), "{}", g.name);
    }
}

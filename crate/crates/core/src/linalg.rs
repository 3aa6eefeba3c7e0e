//! Small dense complex matrices and the unitaries of the built-in gates.
//!
//! Matrices are row-major. For a gate acting on several wires, the first
//! listed wire is the most significant bit of the matrix index, so the CNOT
//! matrix is the textbook one with the control first.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows do not form a square.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "matrix rows must form a square");
            data.extend(row);
        }
        CMatrix { dim, data }
    }

    pub fn try_from_rows(rows: Vec<Vec<C64>>) -> Option<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(Self::from_rows(rows))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits the matrix acts on, if the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<u32> {
        (self.dim.is_power_of_two()).then(|| self.dim.trailing_zeros())
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks(self.dim)
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m.data[c * self.dim + r] = self.data[r * self.dim + c].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> Self {
        let n = self.dim * other.dim;
        let mut m = Self::zeros(n);
        for a in 0..self.dim {
            for b in 0..self.dim {
                let x = self.get(a, b);
                if x == ZERO {
                    continue;
                }
                for c in 0..other.dim {
                    for d in 0..other.dim {
                        m.set(a * other.dim + c, b * other.dim + d, x * other.get(c, d));
                    }
                }
            }
        }
        m
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{row:?}")?;
        }
        f.write_str("]")
    }
}

/// Returns true iff some unit complex `c` makes `‖a − c·b‖_max ≤ tol`.
///
/// The phase is fixed by the entry of `b` with the largest magnitude.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    if a.dim != b.dim {
        return false;
    }
    match phase_between(a, b) {
        Some(c) => a.max_abs_diff(&b.scale(c)) <= tol,
        None => a.data.iter().all(|x| x.norm() <= tol),
    }
}

/// Unit complex `c` with `a ≈ c·b`, taken from the largest-magnitude entry of `b`.
pub fn phase_between(a: &CMatrix, b: &CMatrix) -> Option<C64> {
    let (idx, mag) = b
        .data
        .iter()
        .enumerate()
        .map(|(i, x)| (i, x.norm()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if mag == 0.0 {
        return None;
    }
    let ratio = a.data[idx] / b.data[idx];
    let n = ratio.norm();
    if n == 0.0 {
        return Some(ONE);
    }
    Some(ratio / n)
}

pub mod gates {
    //! Matrices of the primitive gates.
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn m2(a: C64, b: C64, c: C64, d: C64) -> CMatrix {
        CMatrix::from_rows(vec![vec![a, b], vec![c, d]])
    }

    pub fn x() -> CMatrix {
        m2(ZERO, ONE, ONE, ZERO)
    }

    pub fn y() -> CMatrix {
        m2(ZERO, -I, I, ZERO)
    }

    pub fn z() -> CMatrix {
        m2(ONE, ZERO, ZERO, -ONE)
    }

    pub fn h() -> CMatrix {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        m2(s, s, s, -s)
    }

    pub fn phase(lambda: f64) -> CMatrix {
        m2(ONE, ZERO, ZERO, C64::from_polar(1.0, lambda))
    }

    pub fn s() -> CMatrix {
        m2(ONE, ZERO, ZERO, I)
    }

    pub fn sdg() -> CMatrix {
        m2(ONE, ZERO, ZERO, -I)
    }

    pub fn t() -> CMatrix {
        phase(std::f64::consts::FRAC_PI_4)
    }

    pub fn tdg() -> CMatrix {
        phase(-std::f64::consts::FRAC_PI_4)
    }

    pub fn rx(theta: f64) -> CMatrix {
        let (s, c) = (theta / 2.0).sin_cos();
        m2(C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0))
    }

    pub fn ry(theta: f64) -> CMatrix {
        let (s, c) = (theta / 2.0).sin_cos();
        m2(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0))
    }

    pub fn rz(theta: f64) -> CMatrix {
        m2(
            C64::from_polar(1.0, -theta / 2.0),
            ZERO,
            ZERO,
            C64::from_polar(1.0, theta / 2.0),
        )
    }

    /// `U(θ,φ,λ) = Rz(φ)·Ry(θ)·Rz(λ)` with the global phase chosen so the
    /// top-left entry is real.
    pub fn u(theta: f64, phi: f64, lambda: f64) -> CMatrix {
        let (s, c) = (theta / 2.0).sin_cos();
        m2(
            C64::new(c, 0.0),
            -C64::from_polar(s, lambda),
            C64::from_polar(s, phi),
            C64::from_polar(c, phi + lambda),
        )
    }

    pub fn cnot() -> CMatrix {
        let mut m = CMatrix::zeros(4);
        m.set(0, 0, ONE);
        m.set(1, 1, ONE);
        m.set(2, 3, ONE);
        m.set(3, 2, ONE);
        m
    }
}

/// ZYZ Euler angles `(θ, φ, λ)` with `U(θ,φ,λ)` equal to `m` up to global phase.
///
/// When `sin θ` vanishes (θ ∈ {0, π}) only one combination of φ and λ is
/// determined; λ is then pinned to 0 and the rest folded into φ.
pub fn zyz_angles(m: &CMatrix) -> (f64, f64, f64) {
    assert_eq!(m.dim(), 2, "zyz decomposition needs a 2x2 matrix");
    let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
    let inv = det.sqrt().inv();
    // Special-unitary form [[a, -b*], [b, a*]].
    let a = m.get(0, 0) * inv;
    let b = m.get(1, 0) * inv;
    let theta = 2.0 * b.norm().atan2(a.norm());
    let gimbal = 1e-12;
    let (phi, lambda) = if b.norm() <= gimbal {
        (-2.0 * a.arg(), 0.0)
    } else if a.norm() <= gimbal {
        (2.0 * b.arg(), 0.0)
    } else {
        let sum = -2.0 * a.arg();
        let diff = 2.0 * b.arg();
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    (theta, normalize_angle(phi), normalize_angle(lambda))
}

/// Reduces an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Angle equality modulo 2π at 1e-12.
pub fn angles_equal(a: f64, b: f64) -> bool {
    let d = normalize_angle(a - b).abs();
    d <= 1e-12 || (std::f64::consts::TAU - d).abs() <= 1e-12
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn named_gates_are_unitary() {
        for m in [x(), y(), z(), h(), s(), sdg(), t(), tdg(), rx(0.3), ry(1.1), rz(-2.0), u(0.4, 1.2, -0.7), cnot()] {
            assert!(m.is_unitary(1e-12));
        }
    }

    #[test]
    fn u_matches_zyz_product() {
        let (th, ph, la) = (0.9, -1.3, 2.2);
        let prod = &(&rz(ph) * &ry(th)) * &rz(la);
        assert!(equal_up_to_phase(&u(th, ph, la), &prod, 1e-12));
    }

    #[test]
    fn known_u_forms() {
        assert!(equal_up_to_phase(&u(PI, 0.0, PI), &x(), 1e-12));
        assert!(equal_up_to_phase(&u(PI / 2.0, 0.0, PI), &h(), 1e-12));
        assert!(equal_up_to_phase(&u(0.0, 0.0, PI / 2.0), &s(), 1e-12));
        assert!(equal_up_to_phase(&u(PI, PI / 2.0, PI / 2.0), &y(), 1e-12));
    }

    #[test]
    fn zyz_round_trips_gimbal_lock() {
        for m in [CMatrix::identity(2), x(), y(), z(), h(), t(), u(PI, 0.3, 0.0)] {
            let (a, b, c) = zyz_angles(&m);
            assert!(equal_up_to_phase(&u(a, b, c), &m, 1e-12), "{m:?}");
        }
    }

    #[test]
    fn phase_equivalence() {
        let id = CMatrix::identity(2);
        assert!(equal_up_to_phase(&id, &id.scale(I), 1e-9));
        assert!(!equal_up_to_phase(&x(), &z(), 1e-9));
    }

    #[test]
    fn angle_equality_wraps() {
        assert!(angles_equal(PI, -PI));
        assert!(angles_equal(0.1, 0.1 + 2.0 * PI));
        assert!(!angles_equal(0.1, 0.1 + 1e-9));
    }
}

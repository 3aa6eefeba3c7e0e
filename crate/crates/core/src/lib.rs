//! A compiler toolkit for an SSA-based intermediate representation of
//! hybrid quantum-classical programs.
//!
//! The pipeline is:
//!
//! ```text
//! OpenQASM 2.0 ──parse──▶ QasmProgram ──raise──▶ Module (QSSA)
//!                                                  │ verify (types, single use)
//!                                                  │ optimize (peepholes, GVN, DCE, inline, unroll)
//! OpenQASM 2.0 ◀──print── QasmProgram ◀──lower─────┘
//! ```
//!
//! Every stage can be checked against the statevector oracle in [`sim`].
//!
//! Qubit ordering: physical qubit 0 is the least-significant bit of a
//! statevector amplitude index.

pub mod bench;
pub mod ir;
pub mod linalg;
pub mod lower;
pub mod metrics;
pub mod optimize;
pub mod qasm;
pub mod raise;
pub mod sim;
pub mod verify;

pub use ir::{parse_ir, print_ir, Module};
pub use lower::lower;
pub use qasm::{parse_qasm, print_qasm, QasmProgram};
pub use raise::raise;

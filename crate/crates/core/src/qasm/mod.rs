//! OpenQASM 2.0 frontend: AST, parser and canonical printer.
//!
//! `include "qelib1.inc"` resolves to a compiled-in copy of the standard
//! gate library; the library is always in scope. Whole-register arguments
//! are desugared into element-wise statements while parsing, and
//! top-level angle expressions are folded to radians.

mod ast;
mod expr;
mod lexer;
mod parser;
mod printer;
pub mod qelib;

pub use ast::{BinOp, Expr, GateApply, GateBodyStmt, GateDef, QasmProgram, QasmStmt, RegRef, UnaryFn};
pub use parser::parse_qasm;
pub use printer::print_qasm;

/// Errors from [`parse_qasm`]. Every variant carries a 1-based position.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum QasmError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}:{col}: resolution error: {message}")]
    Resolution { line: usize, col: usize, message: String },
    #[error("{line}:{col}: unsupported: {message}")]
    Unsupported { line: usize, col: usize, message: String },
}

impl QasmError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            QasmError::Syntax { line, col, .. }
            | QasmError::Resolution { line, col, .. }
            | QasmError::Unsupported { line, col, .. } => (*line, *col),
        }
    }
}

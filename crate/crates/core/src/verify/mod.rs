//! Static checks: type rules and the single-use (no-cloning) discipline.
//!
//! A qubit SSA value may be used at most once on any execution path. Two
//! checkers enforce this:
//!
//! * [`verify_single_use_regions`] for structured control flow
//!   (`scf.if` / `scf.for`), a single linear walk over the region tree
//!   keeping a *defined-unused* set `D`, a *used* set `U` and a per-region
//!   rollback log.
//! * [`verify_single_use_cfg`] for flat acyclic CFGs, a per-qubit dynamic
//!   program over the blocks in reverse topological order.
//!
//! "Use" means any operand occurrence of a qubit-typed value, including
//! `return`, `scf.yield`, branch arguments and the plumbing ops.

mod cfg;
mod regions;
mod types;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::ir::{Function, Module, OpLoc, ValueId};

pub use cfg::verify_single_use_cfg;
pub use regions::verify_single_use_regions;
pub use types::verify_types;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    DoubleUse,
    EscapedLoopQubit,
    UnusedQubitLeak,
    TypeError,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub severity: Severity,
    /// The offending value, when the diagnostic is about one.
    pub value: Option<ValueId>,
    /// Operation locations, in program order where meaningful. A
    /// `DoubleUse` lists the first use and then the repeated use.
    pub sites: Vec<OpLoc>,
    pub message: String,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub(crate) fn double_use(v: ValueId, first: OpLoc, second: OpLoc) -> Self {
        Diagnostic {
            kind: DiagnosticKind::DoubleUse,
            severity: Severity::Error,
            value: Some(v),
            sites: vec![first, second],
            message: format!("qubit {v} used twice"),
        }
    }

    pub(crate) fn escaped(v: ValueId, site: OpLoc) -> Self {
        Diagnostic {
            kind: DiagnosticKind::EscapedLoopQubit,
            severity: Severity::Error,
            value: Some(v),
            sites: vec![site],
            message: format!("qubit {v} is defined outside the loop and used inside its body without being an iter_arg"),
        }
    }

    pub(crate) fn leak(v: ValueId, site: Option<OpLoc>) -> Self {
        Diagnostic {
            kind: DiagnosticKind::UnusedQubitLeak,
            severity: Severity::Warning,
            value: Some(v),
            sites: site.into_iter().collect(),
            message: format!("qubit {v} is never used"),
        }
    }

    /// Renders as `file:line: severity: message (...)`, resolving sites
    /// through `lines` (operation → 1-based line) when available.
    pub fn render(&self, file: &str, lines: &BTreeMap<OpLoc, usize>) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let at = |l: &OpLoc| match lines.get(l) {
            Some(n) => format!("line {n}"),
            None => l.to_string(),
        };
        let line = self
            .sites
            .last()
            .and_then(|s| lines.get(s))
            .map(|n| format!("{n}:"))
            .unwrap_or_default();
        let detail = match (self.kind, self.sites.as_slice()) {
            (DiagnosticKind::DoubleUse, [first, second, ..]) => {
                format!(" (first use at {}, second use at {})", at(first), at(second))
            }
            (_, [site, ..]) if lines.get(site).is_none() => format!(" (at {site})"),
            _ => String::new(),
        };
        format!("{file}:{line} {sev}: {}{detail}", self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}", self.message)?;
        match (self.kind, self.sites.as_slice()) {
            (DiagnosticKind::DoubleUse, [a, b, ..]) => write!(f, " (first use at {a}, second use at {b})"),
            (_, [a, ..]) => write!(f, " (at {a})"),
            _ => Ok(()),
        }
    }
}

/// Input outside the domain of a checker.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("@{func}: malformed region: {reason}")]
    MalformedRegion { func: String, reason: String },
    #[error("@{func}: control-flow graph has a cycle")]
    CyclicCFG { func: String },
}

/// Runs the type checker and, per function, the single-use checker that
/// matches its shape (structured regions or a flat CFG).
pub fn verify_module(module: &Module) -> Result<Vec<Diagnostic>, VerifyError> {
    let mut out = verify_types(module);
    for f in &module.functions {
        out.extend(verify_single_use(f)?);
    }
    Ok(out)
}

/// Single-use check for one function, dispatching on its shape.
pub fn verify_single_use(f: &Function) -> Result<Vec<Diagnostic>, VerifyError> {
    if f.body.blocks.len() > 1 {
        verify_single_use_cfg(f)
    } else {
        verify_single_use_regions(f)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

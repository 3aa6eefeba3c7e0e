//! Optimization passes over the SSA IR.
//!
//! Every pass is a function `&Module -> (Module, PassReport)`; none of them
//! mutates its input. [`run_pipeline`] chains passes by name:
//!
//! | name | pass |
//! |------|------|
//! | `inline` | inline small non-recursive single-block callees |
//! | `unroll` | fully unroll `scf.for` loops with constant bounds |
//! | `peephole` | declarative gate-cancellation and merge patterns |
//! | `gvn` | scoped classical value numbering plus gate hoisting/sinking across `scf.if` |
//! | `dce` | dead-code elimination |
//!
//! Because results are SSA values with exactly one consumer, "adjacent on a
//! wire" is simply "the operand is the result of the previous gate", which is
//! what makes all of these passes local graph rewrites.

mod dce;
mod gvn;
mod inline;
pub mod peephole;
mod unroll;
pub(crate) mod util;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use dce::run_dce;
pub use gvn::run_gvn;
pub use inline::run_inline;
pub use peephole::{default_patterns, run_patterns, run_peepholes, RewritePattern};
pub use unroll::{run_unroll, MAX_UNROLL_TRIP};

use crate::ir::Module;
use crate::verify::{has_errors, verify_module};

/// What a pass did.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PassReport {
    pub pass: String,
    pub rewrites: usize,
    pub ops_before: usize,
    pub ops_after: usize,
    /// Rewrite counts per pattern (peephole only).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub patterns: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl PassReport {
    pub fn new(pass: &str, ops_before: usize, ops_after: usize, rewrites: usize) -> Self {
        PassReport {
            pass: pass.to_string(),
            rewrites,
            ops_before,
            ops_after,
            patterns: BTreeMap::new(),
            notes: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OptOptions {
    /// Let DCE delete measurements and resets whose results are unused.
    /// This changes the probability space and is off by default.
    pub aggressive_dce: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OptError {
    #[error("unknown pass `{0}` (known: inline, unroll, peephole, gvn, dce)")]
    UnknownPass(String),
}

pub const DEFAULT_PIPELINE: &[&str] = &["inline", "unroll", "peephole", "gvn", "dce", "peephole", "dce"];

fn canonical(name: &str) -> Option<&'static str> {
    Some(match name {
        "inline" => "inline",
        "unroll" => "unroll",
        "peephole" | "peepholes" => "peephole",
        "gvn" | "cse" | "cse_gvn" => "gvn",
        "dce" => "dce",
        _ => return None,
    })
}

/// Splits a comma-separated pipeline string, validating every name.
pub fn parse_pipeline(spec: &str) -> Result<Vec<String>, OptError> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| canonical(s).map(str::to_string).ok_or_else(|| OptError::UnknownPass(s.to_string())))
        .collect()
}

pub fn run_pass(module: &Module, name: &str, opts: OptOptions) -> Result<(Module, PassReport), OptError> {
    Ok(match canonical(name).ok_or_else(|| OptError::UnknownPass(name.to_string()))? {
        "inline" => run_inline(module),
        "unroll" => run_unroll(module),
        "peephole" => run_peepholes(module),
        "gvn" => run_gvn(module),
        _ => run_dce(module, opts.aggressive_dce),
    })
}

/// Runs `passes` in order. In debug builds, a module that verified clean on
/// entry is re-verified after every pass.
pub fn run_pipeline<S: AsRef<str>>(
    module: &Module,
    passes: &[S],
    opts: OptOptions,
) -> Result<(Module, Vec<PassReport>), OptError> {
    for p in passes {
        canonical(p.as_ref()).ok_or_else(|| OptError::UnknownPass(p.as_ref().to_string()))?;
    }
    let check = cfg!(debug_assertions) && matches!(verify_module(module), Ok(d) if !has_errors(&d));
    let mut cur = module.clone();
    let mut reports = Vec::with_capacity(passes.len());
    for p in passes {
        let (next, report) = run_pass(&cur, p.as_ref(), opts)?;
        if check {
            let diags = verify_module(&next);
            debug_assert!(
                matches!(&diags, Ok(d) if !has_errors(d)),
                "pass `{}` broke verification: {diags:?}",
                p.as_ref()
            );
        }
        cur = next;
        reports.push(report);
    }
    Ok((cur, reports))
}

pub fn optimize(module: &Module, opts: OptOptions) -> (Module, Vec<PassReport>) {
    run_pipeline(module, DEFAULT_PIPELINE, opts).expect("the default pipeline only names known passes")
}

use std::collections::{BTreeMap, HashSet};

use super::{Diagnostic, DiagnosticKind, Severity};
use crate::ir::{check_op, Function, Module, OpKind, OpLoc, Region, Type, ValueId};

fn type_error(site: Option<OpLoc>, value: Option<ValueId>, message: String) -> Diagnostic {
    Diagnostic {
        kind: DiagnosticKind::TypeError,
        severity: Severity::Error,
        value,
        sites: site.into_iter().collect(),
        message,
    }
}

/// Checks every operation against the type rules, plus the module-level
/// rules the per-op checker cannot see: unique names, call and return
/// signatures, branch argument types, value scoping and placement of
/// terminators.
pub fn verify_types(module: &Module) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names = HashSet::new();
    for f in &module.functions {
        if !names.insert(f.name.as_str()) {
            out.push(type_error(None, None, format!("function @{} defined twice", f.name)));
        }
    }
    for f in &module.functions {
        FunctionChecker::new(module, f, &mut out).run();
    }
    out
}

struct FunctionChecker<'a> {
    module: &'a Module,
    func: &'a Function,
    types: BTreeMap<ValueId, Type>,
    out: &'a mut Vec<Diagnostic>,
}

impl<'a> FunctionChecker<'a> {
    fn new(module: &'a Module, func: &'a Function, out: &'a mut Vec<Diagnostic>) -> Self {
        FunctionChecker {
            module,
            func,
            types: func.value_types(),
            out,
        }
    }

    fn err(&mut self, site: Option<OpLoc>, value: Option<ValueId>, msg: String) {
        self.out.push(type_error(site, value, format!("@{}: {msg}", self.func.name)));
    }

    fn run(&mut self) {
        let f = self.func;
        for t in f.inputs.iter().chain(&f.outputs) {
            if !t.is_well_formed() {
                self.err(None, None, format!("malformed type {t} in signature"));
            }
        }
        // Every value defined once.
        let mut seen = HashSet::new();
        let mut dups = Vec::new();
        f.body.walk_defs(&mut |v| {
            if !seen.insert(v.id) {
                dups.push(v.id);
            }
        });
        for v in dups {
            self.err(None, Some(v), format!("value {v} defined more than once"));
        }
        match f.body.blocks.first() {
            Some(entry) => {
                let args: Vec<Type> = entry.args.iter().map(|a| a.ty).collect();
                if args != f.inputs {
                    self.err(None, None, "entry block arguments do not match the signature".into());
                }
            }
            None if !f.inputs.is_empty() || !f.outputs.is_empty() => {
                self.err(None, None, "empty body for a function with a signature".into())
            }
            None => {}
        }
        let root = OpLoc::new(f.name.clone());
        let visible = HashSet::new();
        self.region(&f.body, 0, &root, &visible, true);
    }

    fn region(&mut self, region: &Region, ri: usize, parent: &OpLoc, outer: &HashSet<ValueId>, top: bool) {
        let multi = region.blocks.len() > 1;
        let mut visible = outer.clone();
        if multi {
            region.walk_defs(&mut |v| {
                visible.insert(v.id);
            });
        }
        for (bi, block) in region.blocks.iter().enumerate() {
            let mut scope = visible.clone();
            scope.extend(block.args.iter().map(|a| a.id));
            for (oi, op) in block.ops.iter().enumerate() {
                let loc = parent.child(ri, bi, oi);
                let is_last = oi + 1 == block.ops.len();
                for v in op.all_uses() {
                    if !scope.contains(&v) {
                        self.err(Some(loc.clone()), Some(v), format!("{v} is used outside the scope of its definition"));
                    }
                }
                let types = &self.types;
                if let Err(e) = check_op(op, &|v| types.get(&v).copied()) {
                    self.err(Some(loc.clone()), op.results.first().map(|r| r.id), e.to_string());
                }
                if op.kind.is_terminator() && !is_last {
                    self.err(Some(loc.clone()), None, format!("`{}` is not at the end of its block", op.kind.name()));
                }
                match &op.kind {
                    OpKind::Return if !top => {
                        self.err(Some(loc.clone()), None, "`return` inside a nested region".into());
                    }
                    OpKind::Return => {
                        let got: Vec<Type> = op.operands.iter().filter_map(|v| self.types.get(v).copied()).collect();
                        if got != self.func.outputs {
                            self.err(Some(loc.clone()), None, "returned types do not match the signature".into());
                        }
                    }
                    OpKind::Yield if top => {
                        self.err(Some(loc.clone()), None, "`scf.yield` outside a structured region".into());
                    }
                    OpKind::Call(callee) => self.check_call(op, callee, &loc),
                    OpKind::Br | OpKind::CondBr => {
                        for s in &op.successors {
                            match region.blocks.get(s.block) {
                                None => self.err(Some(loc.clone()), None, format!("branch to missing block {}", s.block)),
                                Some(target) => {
                                    let want: Vec<Type> = target.args.iter().map(|a| a.ty).collect();
                                    let got: Vec<Type> = s.args.iter().filter_map(|v| self.types.get(v).copied()).collect();
                                    if want != got {
                                        self.err(Some(loc.clone()), None, "branch arguments do not match the target block".into());
                                    }
                                }
                            }
                        }
                    }
                    _ => {}
                }
                for (rj, r) in op.regions.iter().enumerate() {
                    self.region(r, rj, &loc, &scope, false);
                }
                scope.extend(op.result_ids());
            }
            let terminated = block.ops.last().is_some_and(|op| op.kind.is_terminator());
            if multi && !terminated {
                self.err(None, None, format!("block {bi} has no terminator"));
            }
            if top && !multi && !self.func.outputs.is_empty() && !terminated {
                self.err(None, None, "function with results has no `return`".into());
            }
        }
    }

    fn check_call(&mut self, op: &crate::ir::Operation, callee: &str, loc: &OpLoc) {
        let Some(target) = self.module.function(callee) else {
            self.err(Some(loc.clone()), None, format!("call to unknown function @{callee}"));
            return;
        };
        let got_in: Vec<Type> = op.operands.iter().filter_map(|v| self.types.get(v).copied()).collect();
        let got_out: Vec<Type> = op.results.iter().map(|r| r.ty).collect();
        if got_in != target.inputs || got_out != target.outputs {
            self.err(Some(loc.clone()), None, format!("call does not match the signature of @{callee}"));
        }
    }
}

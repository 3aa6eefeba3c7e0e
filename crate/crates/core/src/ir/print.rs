//! Textual form of the IR.
//!
//! ```text
//! module {
//!   func @main : () -> () {
//!   ^bb0:
//!     %0 = qssa.alloc : () -> (qubit<1>)
//!     %1 = qssa.Rz %0 {angle = 0.7} : (qubit<1>) -> (qubit<1>)
//!     %2, %3 = qssa.measure %1 : (qubit<1>) -> (bits<1>, qubit<1>)
//!     return : () -> ()
//!   }
//! }
//! ```
//!
//! Every operation is written in one generic shape:
//! `results = name operands [successors] {attrs} : (operand types) -> (result types) regions`.
//! Calls write the callee after the mnemonic (`call @f`). Regions follow as
//! brace-delimited block lists. Floats print in shortest round-trip form and
//! always contain `.` or `e`; integers never do. Matrices print as nested
//! lists of `(re, im)` pairs.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{Attr, Block, Function, Module, OpKind, OpLoc, Operation, Region, Type, ValueId};

pub fn print_ir(module: &Module) -> String {
    print_ir_with_lines(module).0
}

/// Prints the module and reports the 1-based line of every operation.
pub fn print_ir_with_lines(module: &Module) -> (String, BTreeMap<OpLoc, usize>) {
    let mut p = Printer::default();
    if module.functions.is_empty() {
        p.out.push_str("module { }\n");
        return (p.out, p.lines);
    }
    p.line("module {");
    for f in &module.functions {
        p.function(f, 1);
    }
    p.line("}");
    (p.out, p.lines)
}

pub fn print_function(func: &Function) -> String {
    let mut p = Printer::default();
    p.function(func, 0);
    p.out
}

#[derive(Default)]
struct Printer {
    out: String,
    line_no: usize,
    lines: BTreeMap<OpLoc, usize>,
    types: BTreeMap<ValueId, Type>,
}

impl Printer {
    fn line(&mut self, s: &str) {
        self.out.push_str(s);
        self.out.push('\n');
        self.line_no += 1;
    }

    fn function(&mut self, f: &Function, depth: usize) {
        self.types = f.value_types();
        let ind = "  ".repeat(depth);
        self.line(&format!(
            "{ind}func @{} : ({}) -> ({}) {{",
            f.name,
            types(&f.inputs),
            types(&f.outputs)
        ));
        self.region_body(&f.body, depth, &OpLoc::new(f.name.clone()), 0);
        self.line(&format!("{ind}}}"));
    }

    fn region_body(&mut self, r: &Region, depth: usize, parent: &OpLoc, ri: usize) {
        for (bi, b) in r.blocks.iter().enumerate() {
            self.block(b, bi, depth, parent, ri);
        }
    }

    fn block(&mut self, b: &Block, bi: usize, depth: usize, parent: &OpLoc, ri: usize) {
        let ind = "  ".repeat(depth);
        let mut header = format!("{ind}^bb{bi}");
        if !b.args.is_empty() {
            let args: Vec<String> = b.args.iter().map(|v| format!("{}: {}", v.id, v.ty)).collect();
            write!(header, "({})", args.join(", ")).unwrap();
        }
        header.push(':');
        self.line(&header);
        for (oi, op) in b.ops.iter().enumerate() {
            let loc = parent.child(ri, bi, oi);
            self.op(op, depth + 1, &loc);
        }
    }

    fn op(&mut self, op: &Operation, depth: usize, loc: &OpLoc) {
        self.lines.insert(loc.clone(), self.line_no + 1);
        let ind = "  ".repeat(depth);
        let mut s = ind.clone();
        if !op.results.is_empty() {
            s.push_str(&ids(op.result_ids()));
            s.push_str(" = ");
        }
        s.push_str(op.kind.name());
        if let OpKind::Call(callee) = &op.kind {
            write!(s, " @{callee}").unwrap();
        }
        if !op.operands.is_empty() {
            s.push(' ');
            s.push_str(&ids(op.operands.iter().copied()));
        }
        if !op.successors.is_empty() {
            let succ: Vec<String> = op
                .successors
                .iter()
                .map(|t| {
                    if t.args.is_empty() {
                        format!("^bb{}", t.block)
                    } else {
                        format!("^bb{}({})", t.block, ids(t.args.iter().copied()))
                    }
                })
                .collect();
            write!(s, " [{}]", succ.join(", ")).unwrap();
        }
        if !op.attrs.is_empty() {
            let attrs: Vec<String> = op.attrs.iter().map(|(k, v)| format!("{k} = {}", attr(v))).collect();
            write!(s, " {{{}}}", attrs.join(", ")).unwrap();
        }
        let operand_types: Vec<Type> = op
            .operands
            .iter()
            .map(|v| self.types.get(v).copied().unwrap_or(Type::Int))
            .collect();
        let result_types: Vec<Type> = op.results.iter().map(|v| v.ty).collect();
        write!(s, " : ({}) -> ({})", types(&operand_types), types(&result_types)).unwrap();
        if op.regions.is_empty() {
            self.line(&s);
            return;
        }
        s.push_str(" {");
        self.line(&s);
        for (ri, r) in op.regions.iter().enumerate() {
            self.region_body(r, depth, loc, ri);
            if ri + 1 < op.regions.len() {
                self.line(&format!("{ind}}} {{"));
            }
        }
        self.line(&format!("{ind}}}"));
    }
}

fn ids(it: impl Iterator<Item = ValueId>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn types(ts: &[Type]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

pub(crate) fn float(f: f64) -> String {
    format!("{f:?}")
}

fn attr(a: &Attr) -> String {
    match a {
        Attr::Float(f) => float(*f),
        Attr::Int(i) => i.to_string(),
        Attr::Matrix(m) => {
            let rows: Vec<String> = m
                .rows()
                .map(|r| {
                    let es: Vec<String> = r.iter().map(|c| format!("({}, {})", float(c.re), float(c.im))).collect();
                    format!("[{}]", es.join(", "))
                })
                .collect();
            format!("[{}]", rows.join(", "))
        }
    }
}

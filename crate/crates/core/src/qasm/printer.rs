use std::fmt::Write;

use super::ast::*;

/// Prints a program in canonical form. `parse_qasm(print_qasm(p)) == p`
/// for every program produced by the parser.
pub fn print_qasm(prog: &QasmProgram) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OPENQASM {};", prog.version);
    s.push_str("include \"qelib1.inc\";\n");
    for stmt in &prog.statements {
        print_stmt(&mut s, stmt);
        s.push('\n');
    }
    s
}

fn reg(r: &RegRef) -> String {
    format!("{}[{}]", r.reg, r.index)
}

fn print_stmt(s: &mut String, stmt: &QasmStmt) {
    match stmt {
        QasmStmt::QregDecl { name, size } => {
            let _ = write!(s, "qreg {name}[{size}];");
        }
        QasmStmt::CregDecl { name, size } => {
            let _ = write!(s, "creg {name}[{size}];");
        }
        QasmStmt::GateDef(g) => {
            let _ = write!(s, "gate {}", g.name);
            if !g.params.is_empty() {
                let _ = write!(s, "({})", g.params.join(","));
            }
            let _ = write!(s, " {} {{", g.qargs.join(","));
            for b in &g.body {
                match b {
                    GateBodyStmt::Apply { name, params, args } => {
                        let _ = write!(s, " {name}{} {};", print_params(params), args.join(","));
                    }
                    GateBodyStmt::Barrier(args) => {
                        let _ = write!(s, " barrier {};", args.join(","));
                    }
                }
            }
            s.push_str(" }");
        }
        QasmStmt::OpaqueDecl { name, params, qargs } => {
            let _ = write!(s, "opaque {name}");
            if !params.is_empty() {
                let _ = write!(s, "({})", params.join(","));
            }
            let _ = write!(s, " {};", qargs.join(","));
        }
        QasmStmt::GateApply(g) => {
            let args: Vec<String> = g.qubits.iter().map(reg).collect();
            let _ = write!(s, "{}{} {};", g.name, print_params(&g.params), args.join(","));
        }
        QasmStmt::Measure { qubit, bit } => {
            let _ = write!(s, "measure {} -> {};", reg(qubit), reg(bit));
        }
        QasmStmt::Reset { qubit } => {
            let _ = write!(s, "reset {};", reg(qubit));
        }
        QasmStmt::Barrier { qubits } => {
            let args: Vec<String> = qubits.iter().map(reg).collect();
            let _ = write!(s, "barrier {};", args.join(","));
        }
        QasmStmt::If { creg, value, body } => {
            let _ = write!(s, "if({creg}=={value}) ");
            print_stmt(s, body);
        }
    }
}

fn print_params(params: &[Expr]) -> String {
    if params.is_empty() {
        return String::new();
    }
    let v: Vec<String> = params.iter().map(print_expr).collect();
    format!("({})", v.join(","))
}

/// Prints an expression so that reparsing yields the same tree: nested
/// binary operands are always parenthesized.
pub fn print_expr(e: &Expr) -> String {
    fn operand(e: &Expr) -> String {
        match e {
            Expr::Bin(..) => format!("({})", print_expr(e)),
            Expr::Num(v) if v.is_sign_negative() => format!("({})", print_expr(e)),
            _ => print_expr(e),
        }
    }
    match e {
        Expr::Num(v) => format!("{v:?}"),
        Expr::Pi => "pi".into(),
        Expr::Param(p) => p.clone(),
        Expr::Neg(inner) => format!("-{}", operand(inner)),
        Expr::Bin(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            format!("{}{sym}{}", operand(a), operand(b))
        }
        Expr::Call(f, inner) => format!("{}({})", f.name(), print_expr(inner)),
    }
}

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{qelib, QasmError};

/// Parses an OpenQASM 2.0 program, resolving names and desugaring
/// whole-register arguments.
pub fn parse_qasm(src: &str) -> Result<QasmProgram, QasmError> {
    let mut p = Parser::new(tokenize(src)?);
    for g in qelib::library() {
        p.gates.insert(g.name.clone(), Sig { params: g.params.len(), qubits: g.qargs.len(), library: true });
    }
    p.program()
}

/// Parses a file of gate definitions only (the library format).
pub(crate) fn parse_gate_library(src: &str) -> Result<Vec<GateDef>, QasmError> {
    let mut p = Parser::new(tokenize(src)?);
    let mut defs = Vec::new();
    while !p.at_eof() {
        let t = p.expect_ident()?;
        if t.0 != "gate" {
            return Err(p.syntax_at(&t.1, "expected `gate`"));
        }
        defs.push(p.gate_def()?);
    }
    Ok(defs)
}

#[derive(Clone, Copy)]
struct Sig {
    params: usize,
    qubits: usize,
    library: bool,
}

enum Arg {
    Whole(String, u32),
    Elem(RegRef),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    gates: HashMap<String, Sig>,
    qregs: HashMap<String, u32>,
    cregs: HashMap<String, u32>,
    out: Vec<QasmStmt>,
}

type Pos = (usize, usize);

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        let mut gates = HashMap::new();
        gates.insert("U".to_string(), Sig { params: 3, qubits: 1, library: false });
        gates.insert("CX".to_string(), Sig { params: 0, qubits: 2, library: false });
        Parser {
            toks,
            pos: 0,
            gates,
            qregs: HashMap::new(),
            cregs: HashMap::new(),
            out: Vec::new(),
        }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn here(&self) -> Pos {
        (self.peek().line, self.peek().col)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn syntax_at(&self, pos: &Pos, msg: impl Into<String>) -> QasmError {
        QasmError::Syntax { line: pos.0, col: pos.1, message: msg.into() }
    }

    fn resolution(pos: Pos, msg: impl Into<String>) -> QasmError {
        QasmError::Resolution { line: pos.0, col: pos.1, message: msg.into() }
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Real(r) => format!("`{r}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek().tok, Tok::Punct(q) if q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), QasmError> {
        if self.eat(p) {
            Ok(())
        } else {
            let here = self.here();
            Err(self.syntax_at(&here, format!("expected `{p}`, found {}", Self::describe(&self.peek().tok))))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), QasmError> {
        let pos = self.here();
        match self.bump().tok {
            Tok::Ident(s) => Ok((s, pos)),
            other => Err(self.syntax_at(&pos, format!("expected identifier, found {}", Self::describe(&other)))),
        }
    }

    fn expect_int(&mut self) -> Result<(u64, Pos), QasmError> {
        let pos = self.here();
        match self.bump().tok {
            Tok::Int(i) => Ok((i, pos)),
            other => Err(self.syntax_at(&pos, format!("expected integer, found {}", Self::describe(&other)))),
        }
    }

    fn program(mut self) -> Result<QasmProgram, QasmError> {
        let (kw, pos) = self.expect_ident()?;
        if kw != "OPENQASM" {
            return Err(self.syntax_at(&pos, "expected `OPENQASM` header"));
        }
        let vpos = self.here();
        let vt = self.bump();
        let version = match vt.tok {
            Tok::Real(_) | Tok::Int(_) => vt.text.clone(),
            other => return Err(self.syntax_at(&vpos, format!("expected version, found {}", Self::describe(&other)))),
        };
        let major = version.split('.').next().unwrap_or("");
        if major != "2" {
            return Err(QasmError::Unsupported {
                line: vpos.0,
                col: vpos.1,
                message: format!("OpenQASM version {version}; only 2.0 is supported"),
            });
        }
        self.expect(";")?;
        while !self.at_eof() {
            self.statement()?;
        }
        Ok(QasmProgram {
            version: "2.0".into(),
            statements: self.out,
        })
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let (kw, pos) = self.expect_ident()?;
        match kw.as_str() {
            "include" => {
                let fpos = self.here();
                let file = match self.bump().tok {
                    Tok::Str(s) => s,
                    other => {
                        return Err(self.syntax_at(&fpos, format!("expected file name, found {}", Self::describe(&other))))
                    }
                };
                self.expect(";")?;
                if file != "qelib1.inc" {
                    return Err(QasmError::Unsupported {
                        line: fpos.0,
                        col: fpos.1,
                        message: format!("include of \"{file}\"; only \"qelib1.inc\" is available"),
                    });
                }
            }
            "qreg" | "creg" => {
                let (name, npos) = self.expect_ident()?;
                self.expect("[")?;
                let (size, spos) = self.expect_int()?;
                self.expect("]")?;
                self.expect(";")?;
                if self.qregs.contains_key(&name) || self.cregs.contains_key(&name) {
                    return Err(Self::resolution(npos, format!("register `{name}` already declared")));
                }
                if size == 0 || size > u32::MAX as u64 {
                    return Err(Self::resolution(spos, format!("invalid register size {size}")));
                }
                let size = size as u32;
                if kw == "qreg" {
                    self.qregs.insert(name.clone(), size);
                    self.out.push(QasmStmt::QregDecl { name, size });
                } else {
                    self.cregs.insert(name.clone(), size);
                    self.out.push(QasmStmt::CregDecl { name, size });
                }
            }
            "gate" => {
                let def = self.gate_def()?;
                self.out.push(QasmStmt::GateDef(def));
            }
            "opaque" => {
                let (name, npos) = self.expect_ident()?;
                let params = if self.eat("(") { self.id_list(")")? } else { Vec::new() };
                let qargs = self.id_list(";")?;
                self.declare_gate(&name, npos, params.len(), qargs.len())?;
                self.out.push(QasmStmt::OpaqueDecl { name, params, qargs });
            }
            "if" => {
                self.expect("(")?;
                let (creg, cpos) = self.expect_ident()?;
                self.expect("==")?;
                let (value, _) = self.expect_int()?;
                self.expect(")")?;
                if !self.cregs.contains_key(&creg) {
                    return Err(Self::resolution(cpos, format!("unknown classical register `{creg}`")));
                }
                let (kw2, pos2) = self.expect_ident()?;
                if matches!(kw2.as_str(), "if" | "barrier" | "gate" | "opaque" | "qreg" | "creg" | "include") {
                    return Err(self.syntax_at(&pos2, format!("`{kw2}` cannot be conditioned")));
                }
                for body in self.quantum_op(kw2, pos2)? {
                    self.out.push(QasmStmt::If { creg: creg.clone(), value, body: Box::new(body) });
                }
            }
            "barrier" => {
                let args = self.arg_list()?;
                let mut qubits = Vec::new();
                for (a, apos) in args {
                    match self.qubit_arg(a, apos)? {
                        Arg::Whole(r, n) => qubits.extend((0..n).map(|i| RegRef::new(r.clone(), i))),
                        Arg::Elem(e) => qubits.push(e),
                    }
                }
                self.out.push(QasmStmt::Barrier { qubits });
            }
            _ => {
                let stmts = self.quantum_op(kw, pos)?;
                self.out.extend(stmts);
            }
        }
        Ok(())
    }

    fn declare_gate(&mut self, name: &str, pos: Pos, params: usize, qubits: usize) -> Result<(), QasmError> {
        if let Some(sig) = self.gates.get(name) {
            if !sig.library {
                return Err(Self::resolution(pos, format!("gate `{name}` already defined")));
            }
        }
        self.gates.insert(name.to_string(), Sig { params, qubits, library: false });
        Ok(())
    }

    fn gate_def(&mut self) -> Result<GateDef, QasmError> {
        let (name, npos) = self.expect_ident()?;
        let params = if self.eat("(") { self.id_list(")")? } else { Vec::new() };
        let qargs = self.id_list("{")?;
        if qargs.is_empty() {
            return Err(Self::resolution(npos, format!("gate `{name}` has no qubit arguments")));
        }
        for (i, q) in qargs.iter().enumerate() {
            if qargs[..i].contains(q) {
                return Err(Self::resolution(npos, format!("duplicate qubit argument `{q}` in gate `{name}`")));
            }
        }
        let mut body = Vec::new();
        while !self.eat("}") {
            let (op, opos) = self.expect_ident()?;
            if op == "barrier" {
                let args = self.id_list(";")?;
                for a in &args {
                    if !qargs.contains(a) {
                        return Err(Self::resolution(opos, format!("unknown qubit `{a}` in gate body")));
                    }
                }
                body.push(GateBodyStmt::Barrier(args));
                continue;
            }
            let sig = *self
                .gates
                .get(&op)
                .ok_or_else(|| Self::resolution(opos, format!("unknown gate `{op}`")))?;
            let exprs = if self.eat("(") { self.expr_list(Some(&params))? } else { Vec::new() };
            let args = self.id_list(";")?;
            if exprs.len() != sig.params || args.len() != sig.qubits {
                return Err(Self::resolution(
                    opos,
                    format!(
                        "gate `{op}` expects {} parameter(s) and {} qubit(s), got {} and {}",
                        sig.params,
                        sig.qubits,
                        exprs.len(),
                        args.len()
                    ),
                ));
            }
            for (i, a) in args.iter().enumerate() {
                if !qargs.contains(a) {
                    return Err(Self::resolution(opos, format!("unknown qubit `{a}` in gate body")));
                }
                if args[..i].contains(a) {
                    return Err(Self::resolution(opos, format!("duplicate qubit argument `{a}`")));
                }
            }
            body.push(GateBodyStmt::Apply { name: op, params: exprs, args });
        }
        self.declare_gate(&name, npos, params.len(), qargs.len())?;
        Ok(GateDef { name, params, qargs, body })
    }

    /// Comma-separated identifiers terminated by `end` (consumed). An empty
    /// list is allowed only for `)` terminators.
    fn id_list(&mut self, end: &str) -> Result<Vec<String>, QasmError> {
        let mut ids = Vec::new();
        if end == ")" && self.eat(")") {
            return Ok(ids);
        }
        loop {
            ids.push(self.expect_ident()?.0);
            if self.eat(end) {
                return Ok(ids);
            }
            self.expect(",")?;
        }
    }

    fn arg_list(&mut self) -> Result<Vec<((String, Option<u32>), Pos)>, QasmError> {
        let mut args = Vec::new();
        loop {
            args.push(self.arg()?);
            if self.eat(";") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn arg(&mut self) -> Result<((String, Option<u32>), Pos), QasmError> {
        let (name, pos) = self.expect_ident()?;
        if self.eat("[") {
            let (i, ipos) = self.expect_int()?;
            self.expect("]")?;
            let i = u32::try_from(i).map_err(|_| Self::resolution(ipos, "index out of range"))?;
            Ok(((name, Some(i)), pos))
        } else {
            Ok(((name, None), pos))
        }
    }

    fn reg_arg(
        regs: &HashMap<String, u32>,
        kind: &str,
        (name, idx): (String, Option<u32>),
        pos: Pos,
    ) -> Result<Arg, QasmError> {
        let size = *regs
            .get(&name)
            .ok_or_else(|| Self::resolution(pos, format!("unknown {kind} register `{name}`")))?;
        match idx {
            None => Ok(Arg::Whole(name, size)),
            Some(i) if i < size => Ok(Arg::Elem(RegRef::new(name, i))),
            Some(i) => Err(Self::resolution(pos, format!("index {i} out of range for `{name}[{size}]`"))),
        }
    }

    fn qubit_arg(&self, a: (String, Option<u32>), pos: Pos) -> Result<Arg, QasmError> {
        Self::reg_arg(&self.qregs, "quantum", a, pos)
    }

    fn bit_arg(&self, a: (String, Option<u32>), pos: Pos) -> Result<Arg, QasmError> {
        Self::reg_arg(&self.cregs, "classical", a, pos)
    }

    /// Expands whole-register arguments into element-wise instances.
    fn broadcast(args: Vec<Arg>, pos: Pos) -> Result<Vec<Vec<RegRef>>, QasmError> {
        let mut width: Option<u32> = None;
        for a in &args {
            if let Arg::Whole(r, n) = a {
                match width {
                    Some(w) if w != *n => {
                        return Err(Self::resolution(
                            pos,
                            format!("register `{r}` has size {n}, expected {w} for broadcast"),
                        ))
                    }
                    _ => width = Some(*n),
                }
            }
        }
        let n = width.unwrap_or(1);
        Ok((0..n)
            .map(|i| {
                args.iter()
                    .map(|a| match a {
                        Arg::Whole(r, _) => RegRef::new(r.clone(), i),
                        Arg::Elem(e) => e.clone(),
                    })
                    .collect()
            })
            .collect())
    }

    fn quantum_op(&mut self, kw: String, pos: Pos) -> Result<Vec<QasmStmt>, QasmError> {
        match kw.as_str() {
            "measure" => {
                let (q, qpos) = self.arg()?;
                self.expect("->")?;
                let (c, cpos) = self.arg()?;
                self.expect(";")?;
                let q = self.qubit_arg(q, qpos)?;
                let c = self.bit_arg(c, cpos)?;
                match (&q, &c) {
                    (Arg::Whole(..), Arg::Elem(_)) | (Arg::Elem(_), Arg::Whole(..)) => {
                        return Err(Self::resolution(pos, "measure mixes a register with a single element"))
                    }
                    _ => {}
                }
                Ok(Self::broadcast(vec![q, c], pos)?
                    .into_iter()
                    .map(|mut v| {
                        let bit = v.pop().unwrap();
                        let qubit = v.pop().unwrap();
                        QasmStmt::Measure { qubit, bit }
                    })
                    .collect())
            }
            "reset" => {
                let (q, qpos) = self.arg()?;
                self.expect(";")?;
                let q = self.qubit_arg(q, qpos)?;
                Ok(Self::broadcast(vec![q], pos)?
                    .into_iter()
                    .map(|mut v| QasmStmt::Reset { qubit: v.pop().unwrap() })
                    .collect())
            }
            _ => {
                let sig = *self
                    .gates
                    .get(&kw)
                    .ok_or_else(|| Self::resolution(pos, format!("unknown gate `{kw}`")))?;
                let params = if self.eat("(") { self.expr_list(None)? } else { Vec::new() };
                let raw = self.arg_list()?;
                if params.len() != sig.params || raw.len() != sig.qubits {
                    return Err(Self::resolution(
                        pos,
                        format!(
                            "gate `{kw}` expects {} parameter(s) and {} qubit(s), got {} and {}",
                            sig.params,
                            sig.qubits,
                            params.len(),
                            raw.len()
                        ),
                    ));
                }
                let mut args = Vec::new();
                for (a, apos) in raw {
                    args.push(self.qubit_arg(a, apos)?);
                }
                let mut out = Vec::new();
                for qubits in Self::broadcast(args, pos)? {
                    for (i, q) in qubits.iter().enumerate() {
                        if qubits[..i].contains(q) {
                            return Err(Self::resolution(
                                pos,
                                format!("qubit `{}[{}]` used twice in one gate", q.reg, q.index),
                            ));
                        }
                    }
                    out.push(QasmStmt::GateApply(GateApply { name: kw.clone(), params: params.clone(), qubits }));
                }
                Ok(out)
            }
        }
    }

    /// Parses `expr, ..., expr )`. With `scope == None` expressions are
    /// folded to constants.
    fn expr_list(&mut self, scope: Option<&[String]>) -> Result<Vec<Expr>, QasmError> {
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            let pos = self.here();
            let e = self.expr(scope)?;
            out.push(match scope {
                Some(_) => e,
                None => Expr::Num(
                    e.eval_const()
                        .ok_or_else(|| Self::resolution(pos, "parameter expression is not constant"))?,
                ),
            });
            if self.eat(")") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn expr(&mut self, scope: Option<&[String]>) -> Result<Expr, QasmError> {
        let mut lhs = self.term(scope)?;
        loop {
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term(scope)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self, scope: Option<&[String]>) -> Result<Expr, QasmError> {
        let mut lhs = self.unary(scope)?;
        loop {
            let op = if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary(scope)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self, scope: Option<&[String]>) -> Result<Expr, QasmError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary(scope)?)));
        }
        if self.eat("+") {
            return self.unary(scope);
        }
        let base = self.primary(scope)?;
        if self.eat("^") {
            let exp = self.unary(scope)?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self, scope: Option<&[String]>) -> Result<Expr, QasmError> {
        let pos = self.here();
        match self.bump().tok {
            Tok::Int(i) => Ok(Expr::Num(i as f64)),
            Tok::Real(r) => Ok(Expr::Num(r)),
            Tok::Punct("(") => {
                let e = self.expr(scope)?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(id) if id == "pi" => Ok(Expr::Pi),
            Tok::Ident(id) if UnaryFn::from_name(&id).is_some() && self.is_punct("(") => {
                self.expect("(")?;
                let e = self.expr(scope)?;
                self.expect(")")?;
                Ok(Expr::Call(UnaryFn::from_name(&id).unwrap(), Box::new(e)))
            }
            Tok::Ident(id) => match scope {
                Some(params) if params.contains(&id) => Ok(Expr::Param(id)),
                _ => Err(Self::resolution(pos, format!("unknown parameter `{id}`"))),
            },
            other => Err(self.syntax_at(&pos, format!("expected expression, found {}", Self::describe(&other)))),
        }
    }
}

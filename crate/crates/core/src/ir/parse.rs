//! Parser for the textual IR produced by [`print_ir`](super::print_ir).
//!
//! Value names of the form `%<digits>` keep their number as the value id so
//! that printing and re-parsing is exact. Other names (`%q`, `%a1`) are
//! assigned fresh ids above the largest numeric name in their function.

use std::collections::{BTreeMap, HashMap};

use super::{
    check_op, Attr, Attrs, Block, Function, Module, OpKind, OpLoc, Operation, Region, Size, Successor, Type, Value,
    ValueId,
};
use crate::linalg::{CMatrix, C64};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IrParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}:{col}: type error: {message}")]
    Type { line: usize, col: usize, message: String },
}

/// Source position (line, column) of every parsed operation.
pub type SourceMap = BTreeMap<OpLoc, (usize, usize)>;

pub fn parse_ir(text: &str) -> Result<Module, IrParseError> {
    parse_ir_with_locations(text).map(|(m, _)| m)
}

pub fn parse_ir_with_locations(text: &str) -> Result<(Module, SourceMap), IrParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        names: HashMap::new(),
        next_named: 0,
        defs: BTreeMap::new(),
        pending: Vec::new(),
        source: SourceMap::new(),
    };
    let module = p.module()?;
    Ok((module, p.source))
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Value(String),
    Label(String),
    Symbol(String),
    Number(String),
    Punct(char),
    Arrow,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, IrParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let is_word = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$';
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if matches!(c, '%' | '^' | '@') {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && is_word(chars[j]) {
                j += 1;
            }
            if j == start {
                return Err(IrParseError::Syntax {
                    line,
                    col,
                    message: format!("expected a name after `{c}`"),
                });
            }
            let name: String = chars[start..j].iter().collect();
            advance(j - i, &mut i, &mut col);
            match c {
                '%' => Tok::Value(name),
                '^' => Tok::Label(name),
                _ => Tok::Symbol(name),
            }
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            advance(2, &mut i, &mut col);
            Tok::Arrow
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut j = i + 1;
            while j < chars.len() {
                let d = chars[j];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            let s: String = chars[i..j].iter().collect();
            advance(j - i, &mut i, &mut col);
            Tok::Number(s)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && is_word(chars[j]) {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            advance(j - i, &mut i, &mut col);
            Tok::Ident(s)
        } else if "(){}[]<>,:=?".contains(c) {
            advance(1, &mut i, &mut col);
            Tok::Punct(c)
        } else {
            return Err(IrParseError::Syntax {
                line,
                col,
                message: format!("unexpected character `{c}`"),
            });
        };
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct PendingCheck {
    line: usize,
    col: usize,
    operands: Vec<ValueId>,
    declared: Vec<Type>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    names: HashMap<String, ValueId>,
    next_named: u32,
    defs: BTreeMap<ValueId, Type>,
    pending: Vec<PendingCheck>,
    source: SourceMap,
}

type PResult<T> = Result<T, IrParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(IrParseError::Syntax {
            line,
            col,
            message: message.into(),
        })
    }

    fn type_err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(IrParseError::Type {
            line,
            col,
            message: message.into(),
        })
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`, found {}", describe(self.peek())))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            t => {
                let d = describe(t);
                self.syntax(format!("expected `{kw}`, found {d}"))
            }
        }
    }

    fn expect_arrow(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Arrow {
            self.next();
            Ok(())
        } else {
            self.syntax(format!("expected `->`, found {}", describe(self.peek())))
        }
    }

    fn module(&mut self) -> PResult<Module> {
        self.expect_keyword("module")?;
        self.expect_punct('{')?;
        let mut functions = Vec::new();
        while !self.eat_punct('}') {
            let f = self.function()?;
            if functions.iter().any(|g: &Function| g.name == f.name) {
                return self.syntax(format!("duplicate function @{}", f.name));
            }
            functions.push(f);
        }
        if *self.peek() != Tok::Eof {
            return self.syntax("trailing input after module");
        }
        Ok(Module { functions })
    }

    fn function(&mut self) -> PResult<Function> {
        self.expect_keyword("func")?;
        let name = match self.next() {
            Tok::Symbol(s) => s,
            t => return self.syntax(format!("expected function name, found {}", describe(&t))),
        };
        self.expect_punct(':')?;
        let inputs = self.type_list()?;
        self.expect_arrow()?;
        let outputs = self.type_list()?;
        self.begin_function();
        let loc = OpLoc::new(name.clone());
        self.expect_punct('{')?;
        let body = self.region_body(&loc, 0)?;
        self.finish_function()?;
        let entry_args: Vec<Type> = body.blocks.first().map(|b| b.args.iter().map(|v| v.ty).collect()).unwrap_or_default();
        if entry_args != inputs {
            return self.type_err(format!("@{name}: entry block arguments do not match the function inputs"));
        }
        Ok(Function {
            name,
            inputs,
            outputs,
            body,
        })
    }

    /// Resets the name table and reserves ids above the largest numeric name
    /// used anywhere in the upcoming function body.
    fn begin_function(&mut self) {
        self.names.clear();
        self.defs.clear();
        self.pending.clear();
        let mut depth = 0usize;
        let mut max = None::<u32>;
        for t in &self.toks[self.pos..] {
            match &t.tok {
                Tok::Punct('{') => depth += 1,
                Tok::Punct('}') => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        break;
                    }
                }
                Tok::Value(n) => {
                    if let Ok(v) = n.parse::<u32>() {
                        max = Some(max.map_or(v, |m: u32| m.max(v)));
                    }
                }
                _ => {}
            }
        }
        self.next_named = max.map_or(0, |m| m + 1);
    }

    fn finish_function(&mut self) -> PResult<()> {
        for p in std::mem::take(&mut self.pending) {
            for (v, declared) in p.operands.iter().zip(&p.declared) {
                match self.defs.get(v) {
                    None => {
                        return Err(IrParseError::Syntax {
                            line: p.line,
                            col: p.col,
                            message: format!("use of undefined value {v}"),
                        })
                    }
                    Some(t) if t != declared => {
                        return Err(IrParseError::Type {
                            line: p.line,
                            col: p.col,
                            message: format!("operand {v} has type {t}, but the signature says {declared}"),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn value_ref(&mut self, name: &str) -> ValueId {
        if let Some(v) = self.names.get(name) {
            return *v;
        }
        let id = match name.parse::<u32>() {
            Ok(n) => ValueId(n),
            Err(_) => {
                let id = ValueId(self.next_named);
                self.next_named += 1;
                id
            }
        };
        self.names.insert(name.to_string(), id);
        id
    }

    fn define(&mut self, name: &str, ty: Type) -> PResult<Value> {
        let id = self.value_ref(name);
        if self.defs.insert(id, ty).is_some() {
            return self.syntax(format!("value %{name} defined twice"));
        }
        Ok(Value::new(id, ty))
    }

    /// Parses blocks up to and including the closing `}`.
    fn region_body(&mut self, parent: &OpLoc, ri: usize) -> PResult<Region> {
        let mut labels: Vec<String> = Vec::new();
        let mut blocks = Vec::new();
        let mut fixups: Vec<(usize, usize, Vec<String>, usize, usize)> = Vec::new();
        loop {
            if self.eat_punct('}') {
                break;
            }
            let label = match self.peek().clone() {
                Tok::Label(l) => {
                    self.next();
                    l
                }
                _ if blocks.is_empty() => "<entry>".to_string(),
                t => return self.syntax(format!("expected block label, found {}", describe(&t))),
            };
            if labels.contains(&label) {
                return self.syntax(format!("duplicate block label ^{label}"));
            }
            labels.push(label.clone());
            let mut args = Vec::new();
            if label != "<entry>" {
                if self.eat_punct('(') && !self.eat_punct(')') {
                    loop {
                        let name = match self.next() {
                            Tok::Value(n) => n,
                            t => return self.syntax(format!("expected block argument, found {}", describe(&t))),
                        };
                        self.expect_punct(':')?;
                        let ty = self.ty()?;
                        args.push(self.define(&name, ty)?);
                        if self.eat_punct(')') {
                            break;
                        }
                        self.expect_punct(',')?;
                    }
                }
                self.expect_punct(':')?;
            }
            let bi = blocks.len();
            let mut ops = Vec::new();
            while !matches!(self.peek(), Tok::Label(_) | Tok::Punct('}') | Tok::Eof) {
                let oi = ops.len();
                let loc = parent.child(ri, bi, oi);
                let (op, succ_labels) = self.op(&loc)?;
                if !succ_labels.is_empty() {
                    let (line, col) = self.source[&loc];
                    fixups.push((bi, oi, succ_labels, line, col));
                }
                ops.push(op);
            }
            if *self.peek() == Tok::Eof {
                return self.syntax("unexpected end of input inside a region");
            }
            blocks.push(Block { args, ops });
        }
        for (bi, oi, succ_labels, line, col) in fixups {
            for (si, l) in succ_labels.iter().enumerate() {
                let Some(target) = labels.iter().position(|x| x == l) else {
                    return Err(IrParseError::Syntax {
                        line,
                        col,
                        message: format!("unknown block ^{l}"),
                    });
                };
                blocks[bi].ops[oi].successors[si].block = target;
            }
        }
        Ok(Region { blocks })
    }

    fn op(&mut self, loc: &OpLoc) -> PResult<(Operation, Vec<String>)> {
        let (line, col) = self.here();
        self.source.insert(loc.clone(), (line, col));
        let mut result_names = Vec::new();
        if let Tok::Value(_) = self.peek() {
            loop {
                match self.next() {
                    Tok::Value(n) => result_names.push(n),
                    t => return self.syntax(format!("expected result name, found {}", describe(&t))),
                }
                if !self.eat_punct(',') {
                    break;
                }
            }
            self.expect_punct('=')?;
        }
        let (name_line, name_col) = self.here();
        let name = match self.next() {
            Tok::Ident(n) => n,
            t => return self.syntax(format!("expected operation name, found {}", describe(&t))),
        };
        let kind = if name == "call" {
            match self.next() {
                Tok::Symbol(s) => OpKind::Call(s),
                t => return self.syntax(format!("expected callee, found {}", describe(&t))),
            }
        } else {
            match OpKind::from_name(&name) {
                Some(k) => k,
                None => {
                    return Err(IrParseError::Syntax {
                        line: name_line,
                        col: name_col,
                        message: format!("unknown operation `{name}`"),
                    })
                }
            }
        };
        let mut operands = Vec::new();
        if let Tok::Value(_) = self.peek() {
            loop {
                match self.next() {
                    Tok::Value(n) => operands.push(self.value_ref(&n)),
                    t => return self.syntax(format!("expected operand, found {}", describe(&t))),
                }
                if !self.eat_punct(',') {
                    break;
                }
            }
        }
        let mut successors = Vec::new();
        let mut succ_labels = Vec::new();
        if self.eat_punct('[') {
            loop {
                let label = match self.next() {
                    Tok::Label(l) => l,
                    t => return self.syntax(format!("expected successor label, found {}", describe(&t))),
                };
                let mut args = Vec::new();
                if self.eat_punct('(') && !self.eat_punct(')') {
                    loop {
                        match self.next() {
                            Tok::Value(n) => args.push(self.value_ref(&n)),
                            t => return self.syntax(format!("expected successor argument, found {}", describe(&t))),
                        }
                        if self.eat_punct(')') {
                            break;
                        }
                        self.expect_punct(',')?;
                    }
                }
                successors.push(Successor { block: 0, args });
                succ_labels.push(label);
                if self.eat_punct(']') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        let attrs = if self.eat_punct('{') { self.attrs()? } else { Attrs::new() };
        self.expect_punct(':')?;
        let operand_types = self.type_list()?;
        self.expect_arrow()?;
        let result_types = self.type_list()?;
        if operand_types.len() != operands.len() {
            return self.type_err(format!(
                "{} operands but {} operand types",
                operands.len(),
                operand_types.len()
            ));
        }
        if result_types.len() != result_names.len() {
            return self.type_err(format!(
                "{} results but {} result types",
                result_names.len(),
                result_types.len()
            ));
        }
        self.pending.push(PendingCheck {
            line,
            col,
            operands: operands.clone(),
            declared: operand_types.clone(),
        });
        let mut regions = Vec::new();
        while self.eat_punct('{') {
            let ri = regions.len();
            regions.push(self.region_body(loc, ri)?);
        }
        // results are defined after the regions so the body cannot see them
        let mut results = Vec::new();
        for (n, t) in result_names.iter().zip(&result_types) {
            results.push(self.define(n, *t)?);
        }
        let op = Operation {
            kind,
            operands,
            results,
            attrs,
            regions,
            successors,
        };
        let mut types: HashMap<ValueId, Type> = op.operands.iter().copied().zip(operand_types).collect();
        for r in &op.regions {
            r.walk_defs(&mut |v| {
                types.insert(v.id, v.ty);
            });
        }
        // Regions may capture any value already defined in the function.
        let defs = &self.defs;
        if let Err(e) = check_op(&op, &|v| types.get(&v).or_else(|| defs.get(&v)).copied()) {
            return Err(IrParseError::Type {
                line,
                col,
                message: e.to_string(),
            });
        }
        Ok((op, succ_labels))
    }

    fn attrs(&mut self) -> PResult<Attrs> {
        let mut attrs = Attrs::new();
        if self.eat_punct('}') {
            return Ok(attrs);
        }
        loop {
            let name = match self.next() {
                Tok::Ident(n) => n,
                t => return self.syntax(format!("expected attribute name, found {}", describe(&t))),
            };
            self.expect_punct('=')?;
            let value = if *self.peek() == Tok::Punct('[') {
                Attr::Matrix(self.matrix()?)
            } else {
                match self.next() {
                    Tok::Number(s) => number_attr(&s).map_or_else(|| self.syntax(format!("bad number `{s}`")), Ok)?,
                    t => return self.syntax(format!("expected attribute value, found {}", describe(&t))),
                }
            };
            if attrs.insert(name.clone(), value).is_some() {
                return self.syntax(format!("duplicate attribute `{name}`"));
            }
            if self.eat_punct('}') {
                return Ok(attrs);
            }
            self.expect_punct(',')?;
        }
    }

    fn float(&mut self) -> PResult<f64> {
        match self.next() {
            Tok::Number(s) => s.parse::<f64>().map_or_else(|_| self.syntax(format!("bad number `{s}`")), Ok),
            t => self.syntax(format!("expected number, found {}", describe(&t))),
        }
    }

    fn matrix(&mut self) -> PResult<CMatrix> {
        self.expect_punct('[')?;
        let mut rows = Vec::new();
        loop {
            self.expect_punct('[')?;
            let mut row = Vec::new();
            loop {
                self.expect_punct('(')?;
                let re = self.float()?;
                self.expect_punct(',')?;
                let im = self.float()?;
                self.expect_punct(')')?;
                row.push(C64::new(re, im));
                if self.eat_punct(']') {
                    break;
                }
                self.expect_punct(',')?;
            }
            rows.push(row);
            if self.eat_punct(']') {
                break;
            }
            self.expect_punct(',')?;
        }
        match CMatrix::try_from_rows(rows) {
            Some(m) => Ok(m),
            None => self.type_err("matrix attribute must be square"),
        }
    }

    fn type_list(&mut self) -> PResult<Vec<Type>> {
        self.expect_punct('(')?;
        let mut out = Vec::new();
        if self.eat_punct(')') {
            return Ok(out);
        }
        loop {
            out.push(self.ty()?);
            if self.eat_punct(')') {
                return Ok(out);
            }
            self.expect_punct(',')?;
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        let name = match self.next() {
            Tok::Ident(n) => n,
            t => return self.syntax(format!("expected type, found {}", describe(&t))),
        };
        let ty = match name.as_str() {
            "i64" => Type::Int,
            "i1" => Type::Bool,
            "f64" => Type::Angle,
            "qubit" | "bits" | "mem" => {
                self.expect_punct('<')?;
                let size = if self.eat_punct('?') {
                    if name == "mem" {
                        return self.type_err("mem<?> is not supported");
                    }
                    Size::Dynamic
                } else {
                    match self.next() {
                        Tok::Number(s) => match s.parse::<u32>() {
                            Ok(n) => Size::Static(n),
                            Err(_) => return self.syntax(format!("bad size `{s}`")),
                        },
                        t => return self.syntax(format!("expected size, found {}", describe(&t))),
                    }
                };
                self.expect_punct('>')?;
                match (name.as_str(), size) {
                    ("qubit", s) => Type::Qubit(s),
                    ("bits", s) => Type::Bits(s),
                    (_, Size::Static(n)) => Type::BitMem(n),
                    _ => unreachable!(),
                }
            }
            other => return self.syntax(format!("unknown type `{other}`")),
        };
        if !ty.is_well_formed() {
            return self.type_err(format!("malformed type {ty}: sizes must be at least 1"));
        }
        Ok(ty)
    }
}

fn number_attr(s: &str) -> Option<Attr> {
    if s.contains(['.', 'e', 'E']) {
        s.parse().ok().map(Attr::Float)
    } else {
        s.parse().ok().map(Attr::Int)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Value(s) => format!("`%{s}`"),
        Tok::Label(s) => format!("`^{s}`"),
        Tok::Symbol(s) => format!("`@{s}`"),
        Tok::Number(s) => format!("`{s}`"),
        Tok::Punct(c) => format!("`{c}`"),
        Tok::Arrow => "`->`".into(),
        Tok::Eof => "end of input".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::print_ir;

    #[test]
    fn alloc_inside_function() {
        let m = parse_ir("module { func @main : () -> () { %q = qssa.alloc : () -> (qubit<10>) return : () -> () } }").unwrap();
        let op = &m.functions[0].body.blocks[0].ops[0];
        assert_eq!(op.kind, OpKind::Alloc);
        assert_eq!(op.results[0].ty, Type::qubits(10));
    }

    #[test]
    fn zero_width_qubit_is_a_type_error() {
        let e = parse_ir("module { func @main : () -> () { %q = qssa.alloc : () -> (qubit<0>) } }").unwrap_err();
        assert!(matches!(e, IrParseError::Type { .. }), "{e}");
    }

    #[test]
    fn signature_mismatch_is_a_type_error() {
        let src = "module { func @main : () -> () {
            %0 = qssa.alloc : () -> (qubit<2>)
            %1 = qssa.H %0 : (qubit<1>) -> (qubit<1>)
        } }";
        let e = parse_ir(src).unwrap_err();
        assert!(matches!(e, IrParseError::Type { line: 3, .. }), "{e}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_ir("module {\n  func @main : () -> () {\n    %0 = qssa.bogus : () -> ()\n  }\n}").unwrap_err();
        assert_eq!(
            e,
            IrParseError::Syntax {
                line: 3,
                col: 10,
                message: "unknown operation `qssa.bogus`".into()
            }
        );
    }

    #[test]
    fn empty_module() {
        let m = parse_ir("module { }").unwrap();
        assert!(m.functions.is_empty());
        assert_eq!(print_ir(&m), "module { }\n");
    }

    #[test]
    fn named_values_get_fresh_ids_above_numeric_ones() {
        let src = "module { func @main : () -> () {
            %q = qssa.alloc : () -> (qubit<1>)
            %7 = qssa.X %q : (qubit<1>) -> (qubit<1>)
        } }";
        let m = parse_ir(src).unwrap();
        let ops = &m.functions[0].body.blocks[0].ops;
        assert_eq!(ops[0].results[0].id, ValueId(8));
        assert_eq!(ops[1].operands[0], ValueId(8));
    }

    #[test]
    fn branches_resolve_labels() {
        let src = "module { func @f : (i1) -> () {
          ^entry(%c: i1):
            cf.cond_br %c [^l, ^r] : (i1) -> ()
          ^l:
            cf.br [^exit] : () -> ()
          ^r:
            cf.br [^exit] : () -> ()
          ^exit:
            return : () -> ()
        } }";
        let m = parse_ir(src).unwrap();
        let blocks = &m.functions[0].body.blocks;
        assert_eq!(blocks[0].ops[0].successors[1].block, 2);
        assert_eq!(blocks[1].ops[0].successors[0].block, 3);
        assert_eq!(parse_ir(&print_ir(&m)).unwrap(), m);
    }
}

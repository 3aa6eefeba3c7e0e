use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QasmProgram {
    pub version: String,
    pub statements: Vec<QasmStmt>,
}

impl QasmProgram {
    pub fn new(statements: Vec<QasmStmt>) -> Self {
        QasmProgram {
            version: "2.0".into(),
            statements,
        }
    }

    pub fn qregs(&self) -> impl Iterator<Item = (&str, u32)> {
        self.statements.iter().filter_map(|s| match s {
            QasmStmt::QregDecl { name, size } => Some((name.as_str(), *size)),
            _ => None,
        })
    }

    pub fn cregs(&self) -> impl Iterator<Item = (&str, u32)> {
        self.statements.iter().filter_map(|s| match s {
            QasmStmt::CregDecl { name, size } => Some((name.as_str(), *size)),
            _ => None,
        })
    }

    pub fn user_gate(&self, name: &str) -> Option<&GateDef> {
        self.statements.iter().rev().find_map(|s| match s {
            QasmStmt::GateDef(g) if g.name == name => Some(g),
            _ => None,
        })
    }

    pub fn is_opaque(&self, name: &str) -> bool {
        self.statements
            .iter()
            .any(|s| matches!(s, QasmStmt::OpaqueDecl { name: n, .. } if n == name))
    }
}

/// Element of a register, `name[index]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RegRef {
    pub reg: String,
    pub index: u32,
}

impl RegRef {
    pub fn new(reg: impl Into<String>, index: u32) -> Self {
        RegRef {
            reg: reg.into(),
            index,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateApply {
    pub name: String,
    pub params: Vec<Expr>,
    pub qubits: Vec<RegRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateDef {
    pub name: String,
    pub params: Vec<String>,
    pub qargs: Vec<String>,
    pub body: Vec<GateBodyStmt>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GateBodyStmt {
    Apply { name: String, params: Vec<Expr>, args: Vec<String> },
    Barrier(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum QasmStmt {
    QregDecl { name: String, size: u32 },
    CregDecl { name: String, size: u32 },
    GateDef(GateDef),
    OpaqueDecl { name: String, params: Vec<String>, qargs: Vec<String> },
    GateApply(GateApply),
    Measure { qubit: RegRef, bit: RegRef },
    Reset { qubit: RegRef },
    Barrier { qubits: Vec<RegRef> },
    /// `if (creg == value) body;` where the body is a gate, measure or reset.
    If { creg: String, value: u64, body: Box<QasmStmt> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnaryFn {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryFn {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "tan" => UnaryFn::Tan,
            "exp" => UnaryFn::Exp,
            "ln" => UnaryFn::Ln,
            "sqrt" => UnaryFn::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sqrt => "sqrt",
        }
    }
}

/// Parameter expression. Outside gate bodies these are always folded to
/// [`Expr::Num`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Expr {
    Num(f64),
    Pi,
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(UnaryFn, Box<Expr>),
}

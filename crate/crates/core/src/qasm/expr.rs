use super::ast::{BinOp, Expr, UnaryFn};

impl Expr {
    /// Evaluates with `lookup` resolving parameter names. Returns the name of
    /// the first unresolved parameter on failure.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, String> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Param(p) => lookup(p).ok_or_else(|| p.clone())?,
            Expr::Neg(e) => -e.eval_with(lookup)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_with(lookup)?, b.eval_with(lookup)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let x = e.eval_with(lookup)?;
                match f {
                    UnaryFn::Sin => x.sin(),
                    UnaryFn::Cos => x.cos(),
                    UnaryFn::Tan => x.tan(),
                    UnaryFn::Exp => x.exp(),
                    UnaryFn::Ln => x.ln(),
                    UnaryFn::Sqrt => x.sqrt(),
                }
            }
        })
    }

    pub fn eval_const(&self) -> Option<f64> {
        self.eval_with(&|_| None).ok()
    }

    /// Evaluates with positional parameter bindings.
    pub fn eval_bound(&self, names: &[String], values: &[f64]) -> Result<f64, String> {
        self.eval_with(&|p| names.iter().position(|n| n == p).map(|i| values[i]))
    }

    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) => out.push(p.clone()),
            Expr::Neg(e) | Expr::Call(_, e) => e.params(out),
            Expr::Bin(_, a, b) => {
                a.params(out);
                b.params(out);
            }
            Expr::Num(_) | Expr::Pi => {}
        }
    }
}

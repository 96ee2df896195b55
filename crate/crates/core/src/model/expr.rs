//! Expression trees used in equations, transform conditions and actions.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::Literal;

/// Functions every unit may call without importing a function class.
pub const BUILTINS: [&str; 7] = ["sin", "cos", "exp", "log", "abs", "min", "max"];

/// Kernel intrinsics: `der(x)` in equations, `time()` and `timeout()` in
/// discrete behavior.
pub const INTRINSICS: [&str; 3] = ["der", "time", "timeout"];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name) || INTRINSICS.contains(&name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

const NOT_PREC: u8 = 3;
const NEG_PREC: u8 = 7;
const ATOM_PREC: u8 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Lit(Literal),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn real(v: f64) -> Expr {
        Expr::Lit(Literal::Real(v))
    }

    pub fn int(v: i64) -> Expr {
        Expr::Lit(Literal::Int(v))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(name.to_string(), args)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Lit(_) | Expr::Var(_) | Expr::Call(..) => ATOM_PREC,
            Expr::Unary(UnOp::Not, _) => NOT_PREC,
            Expr::Unary(UnOp::Neg, _) => NEG_PREC,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Lit(_) | Expr::Var(_) => {}
            Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
        }
    }

    /// Variables referenced, in first-occurrence order without repeats.
    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(v) = e {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    /// Calls to functions that are neither built-ins nor intrinsics.
    pub fn calls(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Call(name, _) = e {
                if !is_builtin(name) && !out.contains(name) {
                    out.push(name.clone());
                }
            }
        });
        out
    }

    /// Every call name including built-ins.
    pub fn all_calls(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Call(name, _) = e {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        });
        out
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

fn is_numeric_lit(e: &Expr) -> bool {
    matches!(e, Expr::Lit(Literal::Int(_) | Literal::Real(_)))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Unary(UnOp::Neg, e) => {
                if is_numeric_lit(e) || matches!(**e, Expr::Unary(UnOp::Neg, _)) {
                    write!(f, "-({e})")
                } else {
                    f.write_str("-")?;
                    e.fmt_child(f, NEG_PREC)
                }
            }
            Expr::Unary(UnOp::Not, e) => {
                f.write_str("not ")?;
                e.fmt_child(f, NOT_PREC)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let (lmin, rmin) = if op.is_comparison() { (p + 1, p + 1) } else { (p, p + 1) };
                a.fmt_child(f, lmin)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_child(f, rmin)
            }
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_parentheses() {
        let e = Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Add, Expr::var("a"), Expr::var("b")),
            Expr::var("c"),
        );
        assert_eq!(e.to_string(), "(a + b) * c");
        let e = Expr::binary(
            BinOp::Sub,
            Expr::var("a"),
            Expr::binary(BinOp::Sub, Expr::var("b"), Expr::var("c")),
        );
        assert_eq!(e.to_string(), "a - (b - c)");
    }

    #[test]
    fn call_and_var_scans() {
        let e = Expr::call(
            "clamp",
            vec![
                Expr::binary(BinOp::Mul, Expr::var("volt"), Expr::real(2.0)),
                Expr::call("max", vec![Expr::var("lo"), Expr::var("volt")]),
            ],
        );
        assert_eq!(e.vars(), vec!["volt", "lo"]);
        assert_eq!(e.calls(), vec!["clamp"]);
        assert_eq!(e.all_calls(), vec!["clamp", "max"]);
        assert_eq!(e.to_string(), "clamp(volt * 2.0, max(lo, volt))");
    }
}

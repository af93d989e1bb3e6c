//! Expression language for the nonlinearities `f(t, x, y)` and `g(t, x, y)`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | var | func '(' expr ')' | '(' expr ')'
//! var     := 't' | 'x' | 'y'
//! func    := sin | cos | exp | abs | sqrt
//! ```
//!
//! Binary operators are left-associative. [`Expr`]'s `Display` impl is a
//! canonical printer whose output parses back to the same tree.

mod parser;
mod probe;

use alloc::boxed::Box;
use core::fmt;

pub use parser::{parse, ParseError, ParseErrorKind};
pub use probe::{lipschitz_probe, ProbeBox, ProbeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
    Y,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Parsed expression tree. Operator and call nodes carry the byte offset of
/// their token in the source so evaluation errors can point at it.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        pos: usize,
    },
    Call {
        func: Func,
        arg: Box<Expr>,
        pos: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    SqrtOfNegative,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    /// Byte offset of the offending operator or call in the source.
    pub pos: usize,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            EvalErrorKind::DivisionByZero => "division by zero",
            EvalErrorKind::SqrtOfNegative => "square root of a negative number",
            EvalErrorKind::NonFinite => "non-finite result",
        };
        write!(f, "{what} at offset {}", self.pos)
    }
}

impl core::error::Error for EvalError {}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    /// Builds a binary node with no source position (programmatic trees).
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            pos: 0,
        }
    }

    pub fn call(func: Func, arg: Expr) -> Self {
        Expr::Call {
            func,
            arg: Box::new(arg),
            pos: 0,
        }
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Neg(inner) => -inner.eval(t, x, y)?,
            Expr::Binary { op, lhs, rhs, pos } => {
                let l = lhs.eval(t, x, y)?;
                let r = rhs.eval(t, x, y)?;
                let v = match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(EvalError {
                                kind: EvalErrorKind::DivisionByZero,
                                pos: *pos,
                            });
                        }
                        l / r
                    }
                };
                return finite(v, *pos);
            }
            Expr::Call { func, arg, pos } => {
                let a = arg.eval(t, x, y)?;
                let v = match func {
                    Func::Sin => libm::sin(a),
                    Func::Cos => libm::cos(a),
                    Func::Exp => libm::exp(a),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError {
                                kind: EvalErrorKind::SqrtOfNegative,
                                pos: *pos,
                            });
                        }
                        libm::sqrt(a)
                    }
                };
                return finite(v, *pos);
            }
        };
        finite(value, 0)
    }

    /// Whether the tree mentions `v`.
    pub fn uses(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(inner) => inner.uses(v),
            Expr::Binary { lhs, rhs, .. } => lhs.uses(v) || rhs.uses(v),
            Expr::Call { arg, .. } => arg.uses(v),
        }
    }

    /// True when the expression depends on `t` alone.
    pub fn is_time_only(&self) -> bool {
        !self.uses(Var::X) && !self.uses(Var::Y)
    }

    /// Structural equality that ignores source positions.
    pub fn same_shape(&self, other: &Expr) -> bool {
        match (self, other) {
            (Expr::Num(a), Expr::Num(b)) => a.to_bits() == b.to_bits(),
            (Expr::Var(a), Expr::Var(b)) => a == b,
            (Expr::Neg(a), Expr::Neg(b)) => a.same_shape(b),
            (
                Expr::Binary { op: o1, lhs: l1, rhs: r1, .. },
                Expr::Binary { op: o2, lhs: l2, rhs: r2, .. },
            ) => o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2),
            (Expr::Call { func: f1, arg: a1, .. }, Expr::Call { func: f2, arg: a2, .. }) => {
                f1 == f2 && a1.same_shape(a2)
            }
            _ => false,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8, right_side: bool) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                // Negative literals only come from programmatic trees.
                if v.is_sign_negative() {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                inner.write_prec(f, 3, false)
            }
            Expr::Binary { op, lhs, rhs, .. } => {
                let prec = op.precedence();
                let wrap = prec < parent || (prec == parent && right_side);
                if wrap {
                    f.write_str("(")?;
                }
                lhs.write_prec(f, prec, false)?;
                write!(f, " {} ", op.symbol())?;
                rhs.write_prec(f, prec, true)?;
                if wrap {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Call { func, arg, .. } => {
                write!(f, "{}(", func.name())?;
                arg.write_prec(f, 0, false)?;
                f.write_str(")")
            }
        }
    }
}

fn finite(v: f64, pos: usize) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError {
            kind: EvalErrorKind::NonFinite,
            pos,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0, false)
    }
}

use std::collections::BTreeSet;
use std::fmt;

use crate::model::FeatureSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Log,
    Logistic,
}

impl UnaryFn {
    fn name(self) -> &'static str {
        match self {
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Logistic => "logistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

/// Expression tree over feature indices of a [`FeatureSpace`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Feature(usize),
    Neg(Box<Expr>),
    Call(UnaryFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn negated(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    /// Evaluates the tree. Operations producing a non-finite value set
    /// `guarded` and return a finite substitute: NaN becomes 0 and an
    /// infinity saturates to the largest finite value of the same sign.
    /// `log` of a non-positive argument is evaluated at the smallest
    /// positive normal number.
    pub fn eval(&self, x: &[f64], guarded: &mut bool) -> f64 {
        let v = match self {
            Expr::Const(c) => return *c,
            Expr::Feature(i) => return x[*i],
            Expr::Neg(e) => -e.eval(x, guarded),
            Expr::Call(f, e) => {
                let a = e.eval(x, guarded);
                match f {
                    UnaryFn::Exp => a.exp(),
                    UnaryFn::Log => {
                        if a <= 0.0 {
                            *guarded = true;
                            f64::MIN_POSITIVE.ln()
                        } else {
                            a.ln()
                        }
                    }
                    UnaryFn::Logistic => 1.0 / (1.0 + (-a).exp()),
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval(x, guarded);
                let b = r.eval(x, guarded);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                    BinOp::Min => a.min(b),
                    BinOp::Max => a.max(b),
                }
            }
        };
        if v.is_finite() {
            v
        } else {
            *guarded = true;
            if v.is_nan() {
                0.0
            } else {
                f64::MAX.copysign(v)
            }
        }
    }

    /// Feature indices referenced anywhere in the tree.
    pub fn features(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_features(&mut out);
        out
    }

    fn collect_features(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Feature(i) => {
                out.insert(*i);
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_features(out),
            Expr::Binary(_, l, r) => {
                l.collect_features(out);
                r.collect_features(out);
            }
        }
    }

    pub fn display<'a>(&'a self, space: &'a FeatureSpace) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, space }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Formats a literal so that parsing it back yields the same `f64`.
pub(crate) fn format_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    space: &'a FeatureSpace,
}

impl ExprDisplay<'_> {
    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{})", format_number(-c))
            }
            Expr::Const(c) => f.write_str(&format_number(*c)),
            Expr::Feature(i) => f.write_str(self.space.name(*i)),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                self.write_operand(inner, f)
            }
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                self.write(arg, f)?;
                f.write_str(")")
            }
            Expr::Binary(op @ (BinOp::Min | BinOp::Max), l, r) => {
                f.write_str(if *op == BinOp::Min { "min(" } else { "max(" })?;
                self.write(l, f)?;
                f.write_str(", ")?;
                self.write(r, f)?;
                f.write_str(")")
            }
            Expr::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                    BinOp::Min | BinOp::Max => unreachable!(),
                };
                self.write_operand(l, f)?;
                f.write_str(sym)?;
                self.write_operand(r, f)
            }
        }
    }

    /// Operands that are themselves operators get parentheses.
    fn write_operand(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            Expr::Neg(_)
            | Expr::Binary(BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Pow, ..) => {
                f.write_str("(")?;
                self.write(e, f)?;
                f.write_str(")")
            }
            _ => self.write(e, f),
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

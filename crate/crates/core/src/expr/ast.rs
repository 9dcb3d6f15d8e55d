use std::collections::BTreeSet;
use std::fmt;

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub kind: VarKind,
    pub index: usize,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarKind::X => write!(f, "x{}", self.index),
            VarKind::Y => write!(f, "y{}", self.index),
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
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tanh,
    Abs,
    Sign,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Immutable syntax tree of an analytic expression in `x0..`, `y0..`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable assignment for [`Expr::eval`].
#[derive(Debug, Clone, Copy)]
pub struct Env<'a, S> {
    pub x: &'a [S],
    pub y: &'a [S],
}

impl<'a, S> Env<'a, S> {
    pub fn new(x: &'a [S], y: &'a [S]) -> Self {
        Self { x, y }
    }

    pub fn x_only(x: &'a [S]) -> Self {
        Self { x, y: &[] }
    }
}

impl Expr {
    pub fn eval<S: Scalar>(&self, env: &Env<'_, S>) -> Result<S> {
        match self {
            Expr::Num(v) => Ok(S::from_f64(*v)),
            Expr::Var(v) => {
                let slot = match v.kind {
                    VarKind::X => env.x,
                    VarKind::Y => env.y,
                };
                slot.get(v.index).copied().ok_or_else(|| Error::IndexOutOfRange {
                    name: v.to_string(),
                    n: slot.len(),
                    offset: 0,
                })
            }
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Bin(op, a, b) => {
                let lhs = a.eval(env)?;
                match op {
                    BinOp::Add => Ok(lhs + b.eval(env)?),
                    BinOp::Sub => Ok(lhs - b.eval(env)?),
                    BinOp::Mul => Ok(lhs * b.eval(env)?),
                    BinOp::Div => {
                        let rhs = b.eval(env)?;
                        if rhs.re() == 0.0 {
                            return Err(Error::domain(format!("division by zero in `{self}`")));
                        }
                        Ok(lhs / rhs)
                    }
                    BinOp::Pow => pow(lhs, b, env),
                }
            }
            Expr::Call(func, arg) => {
                let v = arg.eval(env)?;
                let r = v.re();
                match func {
                    Func::Exp => Ok(v.exp()),
                    Func::Ln => {
                        if r <= 0.0 {
                            return Err(Error::domain(format!("ln of non-positive value {r}")));
                        }
                        Ok(v.ln())
                    }
                    Func::Sin => Ok(v.sin()),
                    Func::Cos => Ok(v.cos()),
                    Func::Tanh => Ok(v.tanh()),
                    Func::Abs => Ok(v.abs()),
                    Func::Sign => Ok(v.sign()),
                    Func::Sqrt => {
                        if r < 0.0 {
                            return Err(Error::domain(format!("sqrt of negative value {r}")));
                        }
                        Ok(v.sqrt())
                    }
                }
            }
        }
    }

    /// Evaluate with plain reals.
    pub fn eval_f64(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.eval(&Env::new(x, y))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Free variables by name, e.g. `{"x0", "y1"}`.
    pub fn free_var_names(&self) -> BTreeSet<String> {
        self.free_vars().iter().map(|v| v.to_string()).collect()
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn depends_on_y(&self) -> bool {
        self.free_vars().iter().any(|v| v.kind == VarKind::Y)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.free_vars().iter().map(|v| v.index).max()
    }
}

/// Constant integer exponents use `powi` and accept any nonzero base (and a
/// zero base for positive exponents). Every other exponent needs a strictly
/// positive base.
fn pow<S: Scalar>(base: S, exponent: &Expr, env: &Env<'_, S>) -> Result<S> {
    let b = base.re();
    if exponent.is_constant() {
        let p: f64 = exponent.eval(&Env::<f64>::new(&[], &[]))?;
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            if b == 0.0 && p < 0.0 {
                return Err(Error::domain("zero raised to a negative power"));
            }
            return Ok(base.powi(p as i32));
        }
        if b <= 0.0 {
            return Err(Error::domain(format!(
                "non-integer power {p} of non-positive base {b}"
            )));
        }
        return Ok(base.powf(p));
    }
    if b <= 0.0 {
        return Err(Error::domain(format!(
            "variable power of non-positive base {b}"
        )));
    }
    let e = exponent.eval(env)?;
    Ok((e * base.ln()).exp())
}

/// Fully parenthesised rendering that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

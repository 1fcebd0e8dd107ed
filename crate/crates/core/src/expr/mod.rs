//! Arithmetic expression language used for every coefficient function.
//!
//! Grammar (EBNF), highest binding last:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;           (* right associative *)
//! primary = number | ident | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" | "ln" | "sqrt" ;
//! ident   = "x" digits | "mu" digits | "t" | "e" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! Variable indices are 1-based in source text (`x1`, `mu1`) and 0-based in
//! [`Var`]. Which identifiers are legal is fixed by a [`VarScope`].

mod diff;
mod eval;
mod parse;

use std::fmt;

pub use eval::{Bindings, EvalError};
pub use parse::{parse, ParseError};

/// A coordinate symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Base coordinate `x{i+1}`.
    X(usize),
    /// Fiber momentum `mu{i+1}`.
    Mu(usize),
    /// Time.
    T,
    /// Momentum conjugate to time.
    E,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::Mu(i) => write!(f, "mu{}", i + 1),
            Var::T => f.write_str("t"),
            Var::E => f.write_str("e"),
        }
    }
}

/// The set of identifiers an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarScope {
    pub base_dim: usize,
    pub rank: usize,
    pub time: bool,
}

impl VarScope {
    pub fn new(base_dim: usize, rank: usize, time: bool) -> Self {
        Self { base_dim, rank, time }
    }

    pub fn contains(&self, var: Var) -> bool {
        match var {
            Var::X(i) => i < self.base_dim,
            Var::Mu(i) => i < self.rank,
            Var::T | Var::E => self.time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// Expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn var(var: Var) -> Self {
        Expr::Var(var)
    }

    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn one() -> Self {
        Expr::Const(1.0)
    }

    /// Exact zero constant (as produced by differentiation of constants).
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    // The builders below drop exact-zero and exact-one operands so that
    // derivative trees stay small. Parsing never goes through them.

    pub fn add(lhs: Expr, rhs: Expr) -> Self {
        if lhs.is_zero() {
            rhs
        } else if rhs.is_zero() {
            lhs
        } else {
            Expr::binary(BinaryOp::Add, lhs, rhs)
        }
    }

    pub fn sub(lhs: Expr, rhs: Expr) -> Self {
        if rhs.is_zero() {
            lhs
        } else if lhs.is_zero() {
            Expr::neg(rhs)
        } else {
            Expr::binary(BinaryOp::Sub, lhs, rhs)
        }
    }

    pub fn mul(lhs: Expr, rhs: Expr) -> Self {
        if lhs.is_zero() || rhs.is_zero() {
            Expr::zero()
        } else if lhs.is_one() {
            rhs
        } else if rhs.is_one() {
            lhs
        } else {
            Expr::binary(BinaryOp::Mul, lhs, rhs)
        }
    }

    pub fn div(lhs: Expr, rhs: Expr) -> Self {
        if lhs.is_zero() {
            Expr::zero()
        } else if rhs.is_one() {
            lhs
        } else {
            Expr::binary(BinaryOp::Div, lhs, rhs)
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Self {
        if exponent.is_one() {
            base
        } else {
            Expr::binary(BinaryOp::Pow, base, exponent)
        }
    }

    pub fn neg(arg: Expr) -> Self {
        match arg {
            Expr::Const(0.0) => Expr::zero(),
            Expr::Unary(UnaryOp::Neg, inner) => *inner,
            other => Expr::unary(UnaryOp::Neg, other),
        }
    }

    /// Sum of terms, skipping exact zeros.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Self {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// True if `var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Every variable referenced, sorted and deduplicated.
    pub fn variables(&self) -> Vec<Var> {
        fn walk(e: &Expr, out: &mut Vec<Var>) {
            match e {
                Expr::Const(_) => {}
                Expr::Var(v) => out.push(*v),
                Expr::Unary(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Replace variables for which `map` returns `Some`.
    pub fn substitute<F>(&self, map: &F) -> Expr
    where
        F: Fn(Var) -> Option<Expr>,
    {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => map(*v).unwrap_or(Expr::Var(*v)),
            Expr::Unary(op, a) => Expr::unary(*op, a.substitute(map)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.substitute(map), b.substitute(map)),
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

/// Fully parenthesised; re-parses to the identical tree for non-negative
/// constants. Negative constants (only produced programmatically) print as
/// `(0 - c)` and therefore re-parse to a different but equal-valued tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(0 - {:?})", -c)
                } else {
                    write!(f, "{:?}", c)
                }
            }
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(Var),
    #[error("domain error: {reason} in `{subexpr}`")]
    Domain { reason: &'static str, subexpr: String },
}

/// Values for the coordinate symbols of one evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings<'a> {
    pub x: &'a [f64],
    pub mu: &'a [f64],
    pub t: Option<f64>,
    pub e: Option<f64>,
}

impl<'a> Bindings<'a> {
    pub fn new(x: &'a [f64], mu: &'a [f64]) -> Self {
        Self {
            x,
            mu,
            t: None,
            e: None,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn with_energy(mut self, e: f64) -> Self {
        self.e = Some(e);
        self
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        match var {
            Var::X(i) => self.x.get(i).copied(),
            Var::Mu(i) => self.mu.get(i).copied(),
            Var::T => self.t,
            Var::E => self.e,
        }
    }
}

fn domain(reason: &'static str, e: &Expr) -> EvalError {
    EvalError::Domain {
        reason,
        subexpr: e.to_string(),
    }
}

impl Expr {
    /// Double-precision evaluation, left operand first.
    pub fn eval(&self, b: &Bindings<'_>) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => b.get(*v).ok_or(EvalError::Unbound(*v)),
            Expr::Unary(op, a) => {
                let x = a.eval(b)?;
                Ok(match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Ln => {
                        if x <= 0.0 {
                            return Err(domain("logarithm of non-positive value", self));
                        }
                        x.ln()
                    }
                    UnaryOp::Sqrt => {
                        if x < 0.0 {
                            return Err(domain("square root of negative value", self));
                        }
                        x.sqrt()
                    }
                })
            }
            Expr::Binary(op, l, r) => {
                let x = l.eval(b)?;
                let y = r.eval(b)?;
                Ok(match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == 0.0 {
                            return Err(domain("division by zero", self));
                        }
                        x / y
                    }
                    BinaryOp::Pow => {
                        let v = x.powf(y);
                        if v.is_nan() && !x.is_nan() && !y.is_nan() {
                            return Err(domain("non-real power", self));
                        }
                        if x == 0.0 && y < 0.0 {
                            return Err(domain("zero raised to a negative power", self));
                        }
                        v
                    }
                })
            }
        }
    }
}

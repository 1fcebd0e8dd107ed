use super::{BinaryOp, Expr, UnaryOp, Var};

impl Expr {
    /// Symbolic partial derivative with respect to `var`.
    ///
    /// The result is not simplified beyond dropping exact zeros and ones.
    pub fn differentiate(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => {
                if *v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Unary(op, a) => {
                let da = a.differentiate(var);
                if da.is_zero() {
                    return Expr::zero();
                }
                let a = (**a).clone();
                match op {
                    UnaryOp::Neg => Expr::neg(da),
                    UnaryOp::Sin => Expr::mul(Expr::unary(UnaryOp::Cos, a), da),
                    UnaryOp::Cos => Expr::neg(Expr::mul(Expr::unary(UnaryOp::Sin, a), da)),
                    UnaryOp::Exp => Expr::mul(Expr::unary(UnaryOp::Exp, a), da),
                    UnaryOp::Ln => Expr::div(da, a),
                    UnaryOp::Sqrt => Expr::div(da, Expr::mul(Expr::Const(2.0), Expr::unary(UnaryOp::Sqrt, a))),
                }
            }
            Expr::Binary(op, l, r) => {
                let dl = l.differentiate(var);
                let dr = r.differentiate(var);
                let (l, r) = ((**l).clone(), (**r).clone());
                match op {
                    BinaryOp::Add => Expr::add(dl, dr),
                    BinaryOp::Sub => Expr::sub(dl, dr),
                    BinaryOp::Mul => Expr::add(Expr::mul(dl, r), Expr::mul(l, dr)),
                    BinaryOp::Div => {
                        if dr.is_zero() {
                            Expr::div(dl, r)
                        } else {
                            // (l' r - l r') / r^2
                            Expr::div(
                                Expr::sub(Expr::mul(dl, r.clone()), Expr::mul(l, dr)),
                                Expr::pow(r, Expr::Const(2.0)),
                            )
                        }
                    }
                    BinaryOp::Pow => {
                        if dr.is_zero() {
                            if dl.is_zero() {
                                return Expr::zero();
                            }
                            // r * l^(r-1) * l'
                            let exponent = match &r {
                                Expr::Const(c) => Expr::Const(c - 1.0),
                                _ => Expr::sub(r.clone(), Expr::one()),
                            };
                            Expr::mul(Expr::mul(r, Expr::pow(l, exponent)), dl)
                        } else if dl.is_zero() {
                            // l^r * ln(l) * r'
                            Expr::mul(Expr::mul(Expr::pow(l.clone(), r), Expr::unary(UnaryOp::Ln, l)), dr)
                        } else {
                            // l^r * (r' ln(l) + r l' / l)
                            Expr::mul(
                                Expr::pow(l.clone(), r.clone()),
                                Expr::add(
                                    Expr::mul(dr, Expr::unary(UnaryOp::Ln, l.clone())),
                                    Expr::div(Expr::mul(r, dl), l),
                                ),
                            )
                        }
                    }
                }
            }
        }
    }
}

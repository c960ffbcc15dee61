use super::expr::{BinOp, Expr, Func, Node};
use super::jet::{pow_real, Jet};
use crate::error::{Error, Result};

/// Values an expression can be evaluated over. The `f64` and `Jet` implementations
/// perform identical operations on the constant term.
trait Value: Sized + Clone {
    fn lift(&self, v: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn powi(&self, e: i64) -> Result<Self>;
    fn powf(&self, r: f64) -> Result<Self>;
    fn pow(&self, o: &Self) -> Result<Self>;
    fn call(&self, f: Func) -> Result<Self>;
}

impl Value for f64 {
    fn lift(&self, v: f64) -> f64 {
        v
    }
    fn add(&self, o: &f64) -> f64 {
        self + o
    }
    fn sub(&self, o: &f64) -> f64 {
        self - o
    }
    fn mul(&self, o: &f64) -> f64 {
        self * o
    }
    fn div(&self, o: &f64) -> Result<f64> {
        if *o == 0.0 {
            return Err(Error::Domain("division by zero".into()));
        }
        Ok(self / o)
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn powi(&self, e: i64) -> Result<f64> {
        let mut result = 1.0;
        let mut base = *self;
        let mut n = e.unsigned_abs();
        let mut first = true;
        while n > 0 {
            if n & 1 == 1 {
                result = if first { base } else { result * base };
                first = false;
            }
            n >>= 1;
            if n > 0 {
                base *= base;
            }
        }
        if e < 0 {
            if *self == 0.0 {
                return Err(Error::Domain("zero raised to a negative power".into()));
            }
            result = 1.0 / result;
        }
        Ok(result)
    }
    fn powf(&self, r: f64) -> Result<f64> {
        pow_real(*self, r)
    }
    fn pow(&self, o: &f64) -> Result<f64> {
        pow_real(*self, *o)
    }
    fn call(&self, f: Func) -> Result<f64> {
        let x = *self;
        Ok(match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => {
                if x.cos() == 0.0 {
                    return Err(Error::Domain("tan at a pole".into()));
                }
                x.tan()
            }
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(Error::Domain(format!("log of non-positive value {x}")));
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(Error::Domain(format!("sqrt of negative value {x}")));
                }
                x.sqrt()
            }
            Func::Tanh => x.tanh(),
            Func::Abs => x.abs(),
        })
    }
}

impl Value for Jet {
    fn lift(&self, v: f64) -> Jet {
        Jet::constant(v, self.order(), self.base())
    }
    fn add(&self, o: &Jet) -> Jet {
        Jet::add(self, o)
    }
    fn sub(&self, o: &Jet) -> Jet {
        Jet::sub(self, o)
    }
    fn mul(&self, o: &Jet) -> Jet {
        Jet::mul(self, o)
    }
    fn div(&self, o: &Jet) -> Result<Jet> {
        Jet::div(self, o)
    }
    fn neg(&self) -> Jet {
        Jet::neg(self)
    }
    fn powi(&self, e: i64) -> Result<Jet> {
        Jet::powi(self, e)
    }
    fn powf(&self, r: f64) -> Result<Jet> {
        Jet::powf(self, r)
    }
    fn pow(&self, o: &Jet) -> Result<Jet> {
        // a^b = exp(b log a) for a jet-valued exponent.
        if self.order() == 0 || o.order() == 0 {
            let v = pow_real(self.value(), o.value())?;
            return Ok(Jet::constant(v, 0, self.base()));
        }
        if self.value() <= 0.0 {
            return Err(Error::Domain(
                "variable exponent requires a positive base".into(),
            ));
        }
        let mut out = o.mul(&self.ln()?).exp();
        // Keep the constant term identical to the scalar path.
        out.coeffs_mut()[0] = pow_real(self.value(), o.value())?;
        Ok(out)
    }
    fn call(&self, f: Func) -> Result<Jet> {
        match f {
            Func::Sin => Ok(self.sin_cos().0),
            Func::Cos => Ok(self.sin_cos().1),
            Func::Tan => Jet::tan(self),
            Func::Exp => Ok(Jet::exp(self)),
            Func::Log => self.ln(),
            Func::Sqrt => Jet::sqrt(self),
            Func::Tanh => Ok(Jet::tanh(self)),
            Func::Abs => Jet::abs(self),
        }
    }
}

/// Constant exponent, if the node is a literal or a negated literal.
fn constant_exponent(node: &Node) -> Option<f64> {
    match node {
        Node::Num(v) => Some(*v),
        Node::Neg(inner) => constant_exponent(inner).map(|v| -v),
        _ => None,
    }
}

fn eval_node<V: Value>(node: &Node, bindings: &[V], proto: &V) -> Result<V> {
    match node {
        Node::Num(v) => Ok(proto.lift(*v)),
        Node::Var(i) => Ok(bindings[*i].clone()),
        Node::Neg(a) => Ok(eval_node(a, bindings, proto)?.neg()),
        Node::Call(f, a) => eval_node(a, bindings, proto)?.call(*f),
        Node::Bin(op, a, b) => {
            let lhs = eval_node(a, bindings, proto)?;
            if *op == BinOp::Pow {
                if let Some(e) = constant_exponent(b) {
                    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                        return lhs.powi(e as i64);
                    }
                    return lhs.powf(e);
                }
            }
            let rhs = eval_node(b, bindings, proto)?;
            match op {
                BinOp::Add => Ok(lhs.add(&rhs)),
                BinOp::Sub => Ok(lhs.sub(&rhs)),
                BinOp::Mul => Ok(lhs.mul(&rhs)),
                BinOp::Div => lhs.div(&rhs),
                BinOp::Pow => lhs.pow(&rhs),
            }
        }
    }
}

impl Expr {
    fn check_arity(&self, n: usize) -> Result<()> {
        if n != self.vars.len() {
            return Err(Error::DimensionMismatch(format!(
                "expression over {} variables bound with {n} values",
                self.vars.len()
            )));
        }
        Ok(())
    }

    /// IEEE double evaluation; `bindings` follow the declared variable order.
    pub fn eval_scalar(&self, bindings: &[f64]) -> Result<f64> {
        self.check_arity(bindings.len())?;
        let v = eval_node(&self.node, bindings, &0.0)?;
        if v.is_nan() {
            return Err(Error::Domain(format!("`{self}` evaluated to NaN")));
        }
        Ok(v)
    }

    /// Evaluates with bindings given by name.
    pub fn eval_named(&self, bindings: &[(&str, f64)]) -> Result<f64> {
        let values = self
            .vars
            .iter()
            .map(|name| {
                bindings
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| Error::UnknownVariable(name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        self.eval_scalar(&values)
    }

    /// Order-`order` jet of the composite. Bindings must share base point; they are
    /// truncated to `order` if longer.
    pub fn eval_jet(&self, bindings: &[Jet], order: usize) -> Result<Jet> {
        self.check_arity(bindings.len())?;
        let base = bindings.first().map_or(0.0, Jet::base);
        if let Some(b) = bindings.iter().find(|b| b.order() < order) {
            return Err(Error::OrderExhausted(format!(
                "binding of order {} cannot produce an order-{order} jet",
                b.order()
            )));
        }
        let truncated: Vec<Jet> = bindings.iter().map(|b| b.truncate(order)).collect();
        let proto = Jet::zero(order, base);
        let out = eval_node(&self.node, &truncated, &proto)?;
        if out.value().is_nan() {
            return Err(Error::Domain(format!("`{self}` evaluated to NaN")));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolics::expr::{coordinate_variables, curve_variables};
    use crate::symbolics::parse_expr;

    fn t_expr(src: &str) -> Expr {
        parse_expr(src, curve_variables()).unwrap()
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(t_expr("t^2").eval_scalar(&[3.0]).unwrap(), 9.0);
        assert_eq!(t_expr("sin(t)").eval_scalar(&[0.0]).unwrap(), 0.0);
        let e = parse_expr("x1*x2 + 1", coordinate_variables(2)).unwrap();
        assert_eq!(e.eval_scalar(&[2.0, 3.0]).unwrap(), 7.0);
        assert_eq!(e.eval_named(&[("x2", 3.0), ("x1", 2.0)]).unwrap(), 7.0);
    }

    #[test]
    fn scalar_domain_errors() {
        for (src, t) in [("1/t", 0.0), ("log(t)", 0.0), ("log(t)", -1.0), ("t^-1", 0.0), ("sqrt(t)", -1.0), ("t^0.5", -2.0)] {
            let err = t_expr(src).eval_scalar(&[t]).unwrap_err();
            assert!(matches!(err, Error::Domain(_)), "{src} at {t}: {err}");
        }
    }

    #[test]
    fn jet_examples() {
        let t = Jet::variable(0.0, 3);
        let sq = t_expr("t^2").eval_jet(std::slice::from_ref(&t), 3).unwrap();
        assert_eq!(sq.coeffs(), &[0.0, 0.0, 1.0, 0.0]);
        let s = t_expr("sin(t)").eval_jet(&[t], 3).unwrap();
        assert_eq!(s.coeffs()[..3], [0.0, 1.0, 0.0]);
        assert!((s.coeffs()[3] + 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn jet_domain_errors_use_constant_term() {
        let t = Jet::variable(0.0, 2);
        assert!(matches!(t_expr("1/t").eval_jet(std::slice::from_ref(&t), 2), Err(Error::Domain(_))));
        assert!(matches!(t_expr("abs(t)").eval_jet(std::slice::from_ref(&t), 2), Err(Error::Domain(_))));
        // Away from zero abs is smooth.
        let t1 = Jet::variable(-2.0, 2);
        let a = t_expr("abs(t)").eval_jet(&[t1], 2).unwrap();
        assert_eq!(a.coeffs(), &[2.0, -1.0, 0.0]);
    }

    #[test]
    fn variable_exponent() {
        // 2^t = exp(t ln 2)
        let t = Jet::variable(1.0, 3);
        let j = t_expr("2^t").eval_jet(&[t], 3).unwrap();
        let l = 2f64.ln();
        let expected = [2.0, 2.0 * l, l * l, l * l * l / 3.0];
        for (a, b) in j.coeffs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(t_expr("t").eval_scalar(&[1.0, 2.0]), Err(Error::DimensionMismatch(_))));
    }
}

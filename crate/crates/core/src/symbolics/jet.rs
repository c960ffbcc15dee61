//! Truncated Taylor polynomials in one parameter.
//!
//! Coefficients are Taylor-normalized: `coeffs[j] = f^(j)(t0) / j!`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    base: f64,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn new(base: f64, coeffs: Vec<f64>) -> Jet {
        assert!(!coeffs.is_empty(), "a jet needs at least the constant term");
        Jet { base, coeffs }
    }

    pub fn constant(value: f64, order: usize, base: f64) -> Jet {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { base, coeffs }
    }

    pub fn zero(order: usize, base: f64) -> Jet {
        Jet::constant(0.0, order, base)
    }

    /// The identity function `t ↦ t` expanded at `base`.
    pub fn variable(base: f64, order: usize) -> Jet {
        let mut j = Jet::constant(base, order, base);
        if order >= 1 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    /// `j`-th derivative at the base point.
    pub fn derivative_at_base(&self, j: usize) -> f64 {
        self.coeff(j) * factorial(j)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let n = (order + 1).min(self.coeffs.len());
        Jet { base: self.base, coeffs: self.coeffs[..n].to_vec() }
    }

    /// Jet of the derivative; the order drops by one.
    pub fn derivative(&self) -> Result<Jet> {
        if self.order() == 0 {
            return Err(Error::OrderExhausted("cannot differentiate an order-0 jet".into()));
        }
        let coeffs = (0..self.order()).map(|j| (j + 1) as f64 * self.coeffs[j + 1]).collect();
        Ok(Jet { base: self.base, coeffs })
    }

    /// Divides out `(t - base)^shift` from a jet whose first `shift` coefficients vanish.
    pub fn shift_down(&self, shift: usize) -> Result<Jet> {
        if shift > self.order() {
            return Err(Error::OrderExhausted(format!(
                "cannot shift an order-{} jet by {shift}",
                self.order()
            )));
        }
        Ok(Jet { base: self.base, coeffs: self.coeffs[shift..].to_vec() })
    }

    /// Re-expands the represented polynomial about `base + delta`.
    pub fn recenter(&self, delta: f64, order: usize) -> Jet {
        let n = self.coeffs.len();
        let mut out = vec![0.0; order + 1];
        for (i, slot) in out.iter_mut().enumerate().take(n) {
            // Horner in delta over j >= i with binomial weights.
            let mut acc = 0.0;
            for j in (i..n).rev() {
                acc = acc * delta + binomial(j, i) * self.coeffs[j];
            }
            *slot = acc;
        }
        Jet { base: self.base + delta, coeffs: out }
    }

    /// Evaluates the truncated polynomial at `base + delta`.
    pub fn eval_at(&self, delta: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * delta + c)
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet { base: self.base, coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    pub fn neg(&self) -> Jet {
        Jet { base: self.base, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    fn common_order(&self, other: &Jet) -> usize {
        debug_assert!(
            self.base == other.base,
            "jets expanded at different base points ({} vs {})",
            self.base,
            other.base
        );
        self.order().min(other.order())
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let n = self.common_order(other) + 1;
        let coeffs = (0..n).map(|j| self.coeffs[j] + other.coeffs[j]).collect();
        Jet { base: self.base, coeffs }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let n = self.common_order(other) + 1;
        let coeffs = (0..n).map(|j| self.coeffs[j] - other.coeffs[j]).collect();
        Jet { base: self.base, coeffs }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.common_order(other) + 1;
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = (0..n)
            .map(|j| {
                let mut acc = a[0] * b[j];
                for i in 1..=j {
                    acc += a[i] * b[j - i];
                }
                acc
            })
            .collect();
        Jet { base: self.base, coeffs }
    }

    /// `self += k * other`, truncated to `self`'s order.
    pub fn add_scaled(&mut self, k: f64, other: &Jet) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += k * b;
        }
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        let n = self.common_order(other) + 1;
        let b = &other.coeffs;
        if b[0] == 0.0 {
            return Err(Error::Domain("division by a jet with zero constant term".into()));
        }
        let mut q = vec![0.0; n];
        for j in 0..n {
            let mut acc = self.coeffs[j];
            for k in 1..=j {
                acc -= b[k] * q[j - k];
            }
            q[j] = acc / b[0];
        }
        Ok(Jet { base: self.base, coeffs: q })
    }

    /// Integer power by binary exponentiation; negative exponents invert at the end.
    pub fn powi(&self, exponent: i64) -> Result<Jet> {
        let mut result = Jet::constant(1.0, self.order(), self.base);
        let mut base = self.clone();
        let mut e = exponent.unsigned_abs();
        let mut first = true;
        while e > 0 {
            if e & 1 == 1 {
                result = if first { base.clone() } else { result.mul(&base) };
                first = false;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        if exponent < 0 {
            if self.coeffs[0] == 0.0 {
                return Err(Error::Domain("zero raised to a negative power".into()));
            }
            result = Jet::constant(1.0, self.order(), self.base).div(&result)?;
        }
        Ok(result)
    }

    /// Real power with a constant exponent; requires a positive constant term
    /// unless only the value is requested.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        let a = &self.coeffs;
        let n = a.len();
        let p0 = pow_real(a[0], r)?;
        if n == 1 {
            return Ok(Jet { base: self.base, coeffs: vec![p0] });
        }
        if a[0] <= 0.0 {
            return Err(Error::Domain(format!(
                "non-integer power {r} of a jet with non-positive constant term"
            )));
        }
        let mut p = vec![0.0; n];
        p[0] = p0;
        for j in 1..n {
            let mut acc = 0.0;
            for k in 1..=j {
                acc += (r * k as f64 - (j - k) as f64) * a[k] * p[j - k];
            }
            p[j] = acc / (j as f64 * a[0]);
        }
        Ok(Jet { base: self.base, coeffs: p })
    }

    pub fn exp(&self) -> Jet {
        let a = &self.coeffs;
        let n = a.len();
        let mut e = vec![0.0; n];
        e[0] = a[0].exp();
        for j in 1..n {
            let mut acc = 0.0;
            for k in 1..=j {
                acc += k as f64 * a[k] * e[j - k];
            }
            e[j] = acc / j as f64;
        }
        Jet { base: self.base, coeffs: e }
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = &self.coeffs;
        if a[0] <= 0.0 {
            return Err(Error::Domain(format!("log of non-positive value {}", a[0])));
        }
        let n = a.len();
        let mut l = vec![0.0; n];
        l[0] = a[0].ln();
        for j in 1..n {
            let mut acc = a[j];
            for k in 1..j {
                acc -= k as f64 * l[k] * a[j - k] / j as f64;
            }
            l[j] = acc / a[0];
        }
        Ok(Jet { base: self.base, coeffs: l })
    }

    /// Returns `(sin, cos)` of the jet.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let a = &self.coeffs;
        let n = a.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for j in 1..n {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for k in 1..=j {
                ds += k as f64 * a[k] * c[j - k];
                dc += k as f64 * a[k] * s[j - k];
            }
            s[j] = ds / j as f64;
            c[j] = -dc / j as f64;
        }
        (Jet { base: self.base, coeffs: s }, Jet { base: self.base, coeffs: c })
    }

    pub fn tan(&self) -> Result<Jet> {
        if self.coeffs[0].cos() == 0.0 {
            return Err(Error::Domain("tan at a pole".into()));
        }
        Ok(self.tangent_like(self.coeffs[0].tan(), 1.0))
    }

    pub fn tanh(&self) -> Jet {
        self.tangent_like(self.coeffs[0].tanh(), -1.0)
    }

    /// Shared recurrence for `y' = (1 + sign * y^2) a'`.
    fn tangent_like(&self, y0: f64, sign: f64) -> Jet {
        let a = &self.coeffs;
        let n = a.len();
        let mut y = vec![0.0; n];
        let mut w = vec![0.0; n]; // w = 1 + sign * y^2
        y[0] = y0;
        w[0] = 1.0 + sign * y0 * y0;
        for j in 1..n {
            let mut acc = 0.0;
            for k in 1..=j {
                acc += k as f64 * a[k] * w[j - k];
            }
            y[j] = acc / j as f64;
            let mut sq = 0.0;
            for k in 0..=j {
                sq += y[k] * y[j - k];
            }
            w[j] = sign * sq;
        }
        Jet { base: self.base, coeffs: y }
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = &self.coeffs;
        if a[0] < 0.0 {
            return Err(Error::Domain(format!("sqrt of negative value {}", a[0])));
        }
        let n = a.len();
        let r0 = a[0].sqrt();
        if n == 1 {
            return Ok(Jet { base: self.base, coeffs: vec![r0] });
        }
        if a[0] == 0.0 {
            return Err(Error::Domain("sqrt is not differentiable at 0".into()));
        }
        let mut r = vec![0.0; n];
        r[0] = r0;
        for j in 1..n {
            let mut acc = a[j];
            for k in 1..j {
                acc -= r[k] * r[j - k];
            }
            r[j] = acc / (2.0 * r0);
        }
        Ok(Jet { base: self.base, coeffs: r })
    }

    pub fn abs(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0 > 0.0 {
            Ok(self.clone())
        } else if a0 < 0.0 {
            Ok(self.neg())
        } else if self.order() == 0 {
            Ok(Jet { base: self.base, coeffs: vec![a0.abs()] })
        } else {
            Err(Error::Domain("abs is not differentiable at 0".into()))
        }
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "jet@{}[", self.base)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

/// Scalar power matching the jet constant-term rules bit for bit.
pub(crate) fn pow_real(x: f64, y: f64) -> Result<f64> {
    if x == 0.0 && y < 0.0 {
        return Err(Error::Domain("zero raised to a negative power".into()));
    }
    let v = x.powf(y);
    if v.is_nan() {
        return Err(Error::Domain(format!("{x}^{y} is undefined")));
    }
    Ok(v)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A vector of jets sharing base point and order.
pub type JetVector = Vec<Jet>;

pub fn values(v: &[Jet]) -> Vec<f64> {
    v.iter().map(Jet::value).collect()
}

pub fn derivative_vec(v: &[Jet]) -> Result<JetVector> {
    v.iter().map(Jet::derivative).collect()
}

pub fn min_order(v: &[Jet]) -> usize {
    v.iter().map(Jet::order).min().unwrap_or(0)
}

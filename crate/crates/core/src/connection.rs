//! Affine connections given by Christoffel symbols in a single chart, and covariant
//! differentiation of vector fields along curves in jet arithmetic.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::symbolics::{coordinate_variables, parse_expr, BinOp, Expr, Jet, JetVector, Node};

/// `Γ^λ_{μν}` stored densely; entry `(λ, μ, ν)` lives at `λ·m² + μ·m + ν` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelField {
    dim: usize,
    symbols: Vec<Expr>,
    torsion_free: bool,
    label: String,
}

impl ChristoffelField {
    /// The flat connection (all symbols zero) in dimension `dim`.
    pub fn flat(dim: usize) -> ChristoffelField {
        let vars = coordinate_variables(dim);
        ChristoffelField {
            dim,
            symbols: vec![Expr::zero(vars); dim * dim * dim],
            torsion_free: true,
            label: "flat".into(),
        }
    }

    /// Builds a field from `((λ, μ, ν), source)` entries with 1-based indices, as
    /// they are written in scene files. Omitted entries are zero.
    pub fn from_sources<'a, I>(dim: usize, entries: I) -> Result<ChristoffelField>
    where
        I: IntoIterator<Item = ((usize, usize, usize), &'a str)>,
    {
        let mut field = ChristoffelField::flat(dim);
        field.label = "inline".into();
        let vars = field.variables();
        for ((l, m, n), src) in entries {
            for (name, idx) in [("upper", l), ("first lower", m), ("second lower", n)] {
                if idx == 0 || idx > dim {
                    return Err(Error::Validation(format!(
                        "Gamma.{l}.{m}.{n}: {name} index {idx} out of range 1..={dim}"
                    )));
                }
            }
            let expr = parse_expr(src, vars.clone())?;
            field.set(l - 1, m - 1, n - 1, expr);
        }
        field.torsion_free = field.structurally_symmetric();
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn variables(&self) -> Arc<[String]> {
        self.symbols[0].shared_variables()
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion_free
    }

    pub fn is_flat(&self) -> bool {
        self.symbols.iter().all(Expr::is_zero)
    }

    fn index(&self, l: usize, m: usize, n: usize) -> usize {
        (l * self.dim + m) * self.dim + n
    }

    /// 0-based accessor.
    pub fn get(&self, l: usize, m: usize, n: usize) -> &Expr {
        &self.symbols[self.index(l, m, n)]
    }

    /// 0-based setter. The expression must be over `x1..xm`.
    pub fn set(&mut self, l: usize, m: usize, n: usize, expr: Expr) {
        assert_eq!(expr.variables().len(), self.dim, "symbol must be over x1..x{}", self.dim);
        let i = self.index(l, m, n);
        self.symbols[i] = expr;
        self.torsion_free = self.structurally_symmetric();
    }

    fn structurally_symmetric(&self) -> bool {
        let d = self.dim;
        (0..d).all(|l| {
            (0..d).all(|m| (m + 1..d).all(|n| self.get(l, m, n) == self.get(l, n, m)))
        })
    }

    /// Iterates `((λ, μ, ν), expr)` over nonzero entries, 0-based.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = ((usize, usize, usize), &Expr)> {
        let d = self.dim;
        self.symbols.iter().enumerate().filter(|(_, e)| !e.is_zero()).map(move |(i, e)| {
            ((i / (d * d), (i / d) % d, i % d), e)
        })
    }

    /// Torsion-free part: entries `½(Γ^λ_{μν} + Γ^λ_{νμ})`.
    pub fn symmetrize(&self) -> ChristoffelField {
        let d = self.dim;
        let mut out = self.clone();
        for l in 0..d {
            for m in 0..d {
                for n in 0..d {
                    let a = self.get(l, m, n);
                    let b = self.get(l, n, m);
                    let sym = if m == n || a == b {
                        a.clone()
                    } else if a.is_zero() && b.is_zero() {
                        Expr::zero(a.shared_variables())
                    } else {
                        let sum = Node::Bin(
                            BinOp::Add,
                            Box::new(a.node().clone()),
                            Box::new(b.node().clone()),
                        );
                        let half = Node::Bin(BinOp::Mul, Box::new(Node::Num(0.5)), Box::new(sum));
                        Expr::from_node(half, a.shared_variables())
                    };
                    let i = out.index(l, m, n);
                    out.symbols[i] = sym;
                }
            }
        }
        out.torsion_free = true;
        out
    }

    /// All `m³` symbols evaluated at a point.
    pub fn eval_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x.len())?;
        self.symbols
            .iter()
            .map(|e| if e.is_zero() { Ok(0.0) } else { e.eval_scalar(x) })
            .collect()
    }

    /// `Γ^λ_{μν}(x) a^μ b^ν` at a point.
    pub fn contract_at(&self, x: &[f64], a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for ((l, m, n), e) in self.nonzero_entries() {
            out[l] += e.eval_scalar(x)? * a[m] * b[n];
        }
        Ok(out)
    }

    /// Evaluates every nonzero symbol along a curve given by position jets.
    pub fn along(&self, position: &[Jet], order: usize) -> Result<ChristoffelJets> {
        self.check_point(position.len())?;
        let d = self.dim;
        let mut entries: Vec<Option<Jet>> = vec![None; self.symbols.len()];
        for (i, e) in self.symbols.iter().enumerate() {
            let (l, m, n) = (i / (d * d), (i / d) % d, i % d);
            if e.is_zero() {
                continue;
            }
            // Symmetric pairs share one evaluation.
            if n < m && self.torsion_free {
                entries[i] = entries[self.index(l, n, m)].clone();
                continue;
            }
            entries[i] = Some(e.eval_jet(position, order)?);
        }
        Ok(ChristoffelJets { dim: d, entries })
    }

    fn check_point(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "connection of dimension {} evaluated at a {n}-vector",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Christoffel symbols composed with a curve, as jets in the curve parameter.
#[derive(Debug, Clone)]
pub struct ChristoffelJets {
    dim: usize,
    entries: Vec<Option<Jet>>,
}

impl ChristoffelJets {
    pub fn order(&self) -> Option<usize> {
        self.entries.iter().flatten().map(Jet::order).min()
    }

    /// `Γ^λ_{μν} a^μ b^ν` as jets; the order is the smallest among the inputs.
    pub fn contract(&self, a: &[Jet], b: &[Jet]) -> JetVector {
        let d = self.dim;
        let order = a.iter().chain(b).map(Jet::order).min().unwrap_or(0);
        let base = a.first().map_or(0.0, Jet::base);
        let mut out = vec![Jet::zero(order, base); d];
        for (i, g) in self.entries.iter().enumerate() {
            let Some(g) = g else { continue };
            let (l, m, n) = (i / (d * d), (i / d) % d, i % d);
            let term = g.truncate(order).mul(&a[m]).mul(&b[n]);
            out[l] = out[l].add(&term);
        }
        out
    }
}

/// Covariant differentiation along a fixed curve, with `Γ∘γ` evaluated once.
#[derive(Debug, Clone)]
pub struct AlongCurve {
    velocity: JetVector,
    christoffel: ChristoffelJets,
}

impl AlongCurve {
    /// `position` are the jets of `γ`; fields of order up to `position order − 1` can
    /// be differentiated.
    pub fn new(gamma: &ChristoffelField, position: &[Jet]) -> Result<AlongCurve> {
        let order = crate::symbolics::jet::min_order(position);
        if order == 0 {
            return Err(Error::OrderExhausted("curve jets of order 0 have no velocity".into()));
        }
        let velocity = crate::symbolics::jet::derivative_vec(position)?;
        let christoffel = gamma.along(position, order - 1)?;
        Ok(AlongCurve { velocity, christoffel })
    }

    pub fn velocity(&self) -> &[Jet] {
        &self.velocity
    }

    /// `(∇_{∂t} w)^λ = (w^λ)' + Γ^λ_{μν}(γ) (γ')^μ w^ν`; output order is one less than `w`'s.
    pub fn derive(&self, w: &[Jet]) -> Result<JetVector> {
        let dw = crate::symbolics::jet::derivative_vec(w)?;
        let correction = self.christoffel.contract(&self.velocity, w);
        Ok(dw.iter().zip(&correction).map(|(a, b)| a.add(b)).collect())
    }

    /// `w(t0), (∇w)(t0), …, (∇^n w)(t0)` for as many `n` as the jets allow, capped at `max`.
    pub fn iterated_values(&self, w: &[Jet], max: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![crate::symbolics::jet::values(w)];
        let mut current = w.to_vec();
        while out.len() < max && crate::symbolics::jet::min_order(&current) > 0 {
            current = self.derive(&current)?;
            out.push(crate::symbolics::jet::values(&current));
        }
        Ok(out)
    }
}

/// `∇^γ_{∂/∂t} w` for jets of `w`, `γ` and `γ'` sharing base point.
pub fn covariant_derivative_field(
    w: &[Jet],
    position: &[Jet],
    velocity: &[Jet],
    gamma: &ChristoffelField,
) -> Result<JetVector> {
    let order = crate::symbolics::jet::min_order(w);
    if order == 0 {
        return Err(Error::OrderExhausted("field jets of order 0".into()));
    }
    let christoffel = gamma.along(position, order - 1)?;
    let dw = crate::symbolics::jet::derivative_vec(w)?;
    let correction = christoffel.contract(velocity, w);
    Ok(dw.iter().zip(&correction).map(|(a, b)| a.truncate(order - 1).add(b)).collect())
}

/// `D[k] = (∇^k γ)(t0)` for `k = 1..=K`; `vectors[0]` is the velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantChain {
    pub t0: f64,
    pub vectors: Vec<Vec<f64>>,
}

impl CovariantChain {
    /// 1-based access matching `∇^k γ`.
    pub fn d(&self, k: usize) -> &[f64] {
        &self.vectors[k - 1]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Jets of a parametrized curve `t ↦ (γ¹(t), …, γᵐ(t))` at `t0`.
pub fn curve_jets(curve: &[Expr], t0: f64, order: usize) -> Result<JetVector> {
    let t = Jet::variable(t0, order);
    curve.iter().map(|e| e.eval_jet(std::slice::from_ref(&t), order)).collect()
}

/// Covariant derivatives `∇γ, …, ∇^K γ` at `t0`, computed exactly in jet arithmetic.
pub fn covariant_chain(
    gamma: &ChristoffelField,
    curve: &[Expr],
    t0: f64,
    order: usize,
) -> Result<CovariantChain> {
    if curve.len() != gamma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "curve has {} components, connection dimension is {}",
            curve.len(),
            gamma.dim()
        )));
    }
    let position = curve_jets(curve, t0, order)?;
    chain_from_jets(gamma, &position)
}

/// Same as [`covariant_chain`] for precomputed position jets of order `K`.
pub fn chain_from_jets(gamma: &ChristoffelField, position: &[Jet]) -> Result<CovariantChain> {
    let t0 = position.first().map_or(0.0, Jet::base);
    let along = AlongCurve::new(gamma, position)?;
    let order = crate::symbolics::jet::min_order(position);
    let vectors = along.iterated_values(along.velocity(), order)?;
    Ok(CovariantChain { t0, vectors })
}

fn format_coeff_times(out: &mut String, coeff: f64, term: &str) {
    if coeff == 0.0 {
        return;
    }
    let sign = if coeff < 0.0 { "-" } else { "+" };
    let mag = coeff.abs();
    if out.is_empty() {
        if coeff < 0.0 {
            out.push('-');
        }
    } else {
        let _ = write!(out, " {sign} ");
    }
    if term == "1" {
        let _ = write!(out, "{mag:?}");
    } else if mag == 1.0 {
        out.push_str(term);
    } else {
        let _ = write!(out, "{mag:?}*{term}");
    }
}

/// Levi-Civita connection of the half-space metric `|dx|² / x_m²` (`x_m > 0`).
pub fn hyperbolic_halfspace(dim: usize) -> ChristoffelField {
    // Conformal factor e^{2φ}, φ = −ln x_m: Γ^k_{ij} = δ_ik ∂_jφ + δ_jk ∂_iφ − δ_ij ∂_kφ.
    let last = dim - 1;
    let dphi = |i: usize| if i == last { -1.0 } else { 0.0 };
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut entries = Vec::new();
    for k in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                let c = delta(i, k) * dphi(j) + delta(j, k) * dphi(i) - delta(i, j) * dphi(k);
                if c != 0.0 {
                    let mut s = String::new();
                    format_coeff_times(&mut s, c, "1");
                    entries.push(((k + 1, i + 1, j + 1), format!("{s}/x{dim}")));
                }
            }
        }
    }
    from_owned(dim, entries).with_label("hyperbolic-halfspace")
}

/// Levi-Civita connection of the round metric in stereographic coordinates,
/// `4|dx|² / (1 + |x|²)²`.
pub fn sphere_stereographic(dim: usize) -> ChristoffelField {
    let denom = {
        let mut s = String::from("(1");
        for i in 1..=dim {
            let _ = write!(s, " + x{i}^2");
        }
        s.push(')');
        s
    };
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut entries = Vec::new();
    for k in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                // ∂_lφ = −2 x_l / (1 + |x|²); collect the coefficient of each ∂_lφ.
                let mut coeffs = vec![0.0; dim];
                coeffs[j] += delta(i, k);
                coeffs[i] += delta(j, k);
                coeffs[k] -= delta(i, j);
                let mut numer = String::new();
                for (l, c) in coeffs.iter().enumerate() {
                    format_coeff_times(&mut numer, *c, &format!("x{}", l + 1));
                }
                if !numer.is_empty() {
                    entries.push(((k + 1, i + 1, j + 1), format!("-2*({numer})/{denom}")));
                }
            }
        }
    }
    from_owned(dim, entries).with_label("sphere-stereographic")
}

/// Random torsionful connection with quadratic polynomial symbols of amplitude `amplitude`.
pub fn random_poly(dim: usize, seed: u64, amplitude: f64) -> ChristoffelField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for k in 1..=dim {
        for i in 1..=dim {
            for j in 1..=dim {
                let mut s = String::new();
                let push = |s: &mut String, term: &str, rng: &mut ChaCha8Rng| {
                    let c: f64 = amplitude * rng.random_range(-1.0..1.0);
                    format_coeff_times(s, c, term);
                };
                push(&mut s, "1", &mut rng);
                for a in 1..=dim {
                    push(&mut s, &format!("x{a}"), &mut rng);
                }
                for a in 1..=dim {
                    for b in a..=dim {
                        push(&mut s, &format!("x{a}*x{b}"), &mut rng);
                    }
                }
                if !s.is_empty() {
                    entries.push(((k, i, j), s));
                }
            }
        }
    }
    from_owned(dim, entries).with_label(format!("random-poly(seed={seed})"))
}

fn from_owned(dim: usize, entries: Vec<((usize, usize, usize), String)>) -> ChristoffelField {
    ChristoffelField::from_sources(dim, entries.iter().map(|(k, s)| (*k, s.as_str())))
        .expect("preset expressions are well-formed")
}

/// Resolves a preset by name.
pub fn preset(name: &str, dim: usize, seed: u64, amplitude: f64) -> Result<ChristoffelField> {
    if dim < 2 {
        return Err(Error::Validation(format!("dimension {dim} < 2")));
    }
    match name {
        "flat" => Ok(ChristoffelField::flat(dim)),
        "hyperbolic-halfspace" => Ok(hyperbolic_halfspace(dim)),
        "sphere-stereographic" => Ok(sphere_stereographic(dim)),
        "random-poly" => Ok(random_poly(dim, seed, amplitude)),
        other => Err(Error::Validation(format!("unknown connection preset `{other}`"))),
    }
}

pub const PRESETS: [&str; 4] = ["flat", "hyperbolic-halfspace", "sphere-stereographic", "random-poly"];

//! Directed curves `(γ, u, c)` with `γ' = c·u`, frames at degenerate points, and
//! ∇-types of vector fields along curves.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{directions, flag_rank, ABS_FLOOR};
use crate::connection::{covariant_chain, curve_jets, AlongCurve, ChristoffelField, CovariantChain};
use crate::error::{Error, Result};
use crate::symbolics::jet::{derivative_vec, values};
use crate::symbolics::{curve_variables, parse_expr, Expr, Jet, JetVector};

/// Jet coefficients with magnitude at or below this are treated as zero.
pub const DEFAULT_ATOL: f64 = 1e-12;

/// Below this distance from the anchor a degenerate frame is re-expanded from the
/// anchor's Taylor series instead of dividing by `k(t − t0)^{k−1}` directly.
const RECENTER_RADIUS: f64 = 0.05;
const RECENTER_EXTRA_ORDER: usize = 14;

/// How the frame `u` (and factor `c`) of a directed curve is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    /// `u = γ'`, `c = 1`. Only valid on the immersion locus.
    Velocity,
    /// User-supplied frame; when `c` is absent it is recovered as `⟨γ', u⟩ / ⟨u, u⟩`.
    Explicit { u: Vec<Expr>, c: Option<Expr> },
    /// `u = γ' / (k (t − t0)^{k−1})`, `c = k (t − t0)^{k−1}`.
    Degenerate { t0: f64, k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedCurve {
    pub gamma: Vec<Expr>,
    pub frame: Frame,
    pub domain: (f64, f64),
    pub label: String,
}

/// Position, frame and factor jets at one parameter value. `position` has order one
/// higher than `frame` and `factor`.
#[derive(Debug, Clone)]
pub struct FrameJets {
    pub position: JetVector,
    pub frame: JetVector,
    pub factor: Jet,
}

impl DirectedCurve {
    pub fn new(gamma: Vec<Expr>, frame: Frame, domain: (f64, f64)) -> DirectedCurve {
        DirectedCurve { gamma, frame, domain, label: String::new() }
    }

    /// Parses component sources in the variable `t`.
    pub fn from_sources(
        gamma: &[&str],
        frame: Option<(&[&str], Option<&str>)>,
        domain: (f64, f64),
    ) -> Result<DirectedCurve> {
        let vars = curve_variables();
        let gamma = gamma.iter().map(|s| parse_expr(s, vars.clone())).collect::<Result<Vec<_>>>()?;
        let frame = match frame {
            None => Frame::Velocity,
            Some((u, c)) => {
                if u.len() != gamma.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "frame has {} components, curve has {}",
                        u.len(),
                        gamma.len()
                    )));
                }
                Frame::Explicit {
                    u: u.iter().map(|s| parse_expr(s, vars.clone())).collect::<Result<_>>()?,
                    c: c.map(|s| parse_expr(s, vars.clone())).transpose()?,
                }
            }
        };
        Ok(DirectedCurve::new(gamma, frame, domain))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn position_jets(&self, t: f64, order: usize) -> Result<JetVector> {
        curve_jets(&self.gamma, t, order)
    }

    pub fn point(&self, t: f64) -> Result<Vec<f64>> {
        self.gamma.iter().map(|e| e.eval_scalar(&[t])).collect()
    }

    /// Position jets of order `order + 1`, frame and factor jets of order `order`.
    pub fn frame_jets(&self, t: f64, order: usize) -> Result<FrameJets> {
        let position = self.position_jets(t, order + 1)?;
        let (frame, factor) = match &self.frame {
            Frame::Velocity => {
                let u = derivative_vec(&position)?;
                (u, Jet::constant(1.0, order, t))
            }
            Frame::Explicit { u, c } => {
                let u = curve_jets(u, t, order)?;
                let c = match c {
                    Some(c) => c.eval_jet(&[Jet::variable(t, order)], order)?,
                    None => projected_factor(&derivative_vec(&position)?, &u)?,
                };
                (u, c)
            }
            Frame::Degenerate { t0, k } => (
                self.degenerate_frame_at(*t0, *k, t, order)?,
                degenerate_factor(*t0, *k, t, order)?,
            ),
        };
        Ok(FrameJets { position, frame, factor })
    }

    fn degenerate_frame_at(&self, t0: f64, k: usize, t: f64, order: usize) -> Result<JetVector> {
        let delta = t - t0;
        if delta.abs() < RECENTER_RADIUS {
            let series = frame_from_degenerate_unchecked(&self.gamma, t0, k, order + RECENTER_EXTRA_ORDER)?;
            Ok(series.iter().map(|j| j.recenter(delta, order)).collect())
        } else {
            let velocity = derivative_vec(&self.position_jets(t, order + 1)?)?;
            let factor = degenerate_factor(t0, k, t, order)?;
            velocity.iter().map(|v| v.div(&factor)).collect()
        }
    }

    /// Checks the directed-curve invariants at 200 pseudo-random points of the domain.
    pub fn validate(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let (a, b) = self.domain;
        if !(a < b) {
            return Err(Error::Validation(format!("empty curve domain [{a}, {b}]")));
        }
        let samples: Vec<f64> = (0..200).map(|_| rng.random_range(a..b)).collect();
        match &self.frame {
            Frame::Velocity => {
                let immersed = samples.iter().any(|&t| {
                    self.position_jets(t, 1)
                        .ok()
                        .is_some_and(|p| p.iter().any(|j| j.coeff(1).abs() > DEFAULT_ATOL))
                });
                if !immersed {
                    return Err(Error::Validation(
                        "curve velocity vanishes at every sampled point".into(),
                    ));
                }
            }
            Frame::Explicit { .. } => {
                for &t in &samples {
                    let fj = self.frame_jets(t, 0)?;
                    let unorm = norm(&values(&fj.frame));
                    if unorm <= DEFAULT_ATOL {
                        return Err(Error::Validation(format!("frame vanishes at t = {t}")));
                    }
                    let c = fj.factor.value();
                    for (p, u) in fj.position.iter().zip(&fj.frame) {
                        let lhs = p.coeff(1);
                        let rhs = c * u.value();
                        if (lhs - rhs).abs() > 1e-10 * (1.0 + lhs.abs()) {
                            return Err(Error::Validation(format!(
                                "γ' ≠ c·u at t = {t}: {lhs} vs {rhs}"
                            )));
                        }
                    }
                }
            }
            Frame::Degenerate { t0, k } => {
                frame_from_degenerate(&self.gamma, *t0, *k, 1, DEFAULT_ATOL)?;
            }
        }
        Ok(())
    }
}

fn projected_factor(velocity: &[Jet], u: &[Jet]) -> Result<Jet> {
    let dot = |a: &[Jet], b: &[Jet]| {
        a.iter().zip(b).map(|(x, y)| x.mul(y)).reduce(|s, x| s.add(&x)).expect("nonempty")
    };
    dot(velocity, u).div(&dot(u, u))
}

fn degenerate_factor(t0: f64, k: usize, t: f64, order: usize) -> Result<Jet> {
    let tau = Jet::variable(t, order).sub(&Jet::constant(t0, order, t));
    Ok(tau.powi(k as i64 - 1)?.scale(k as f64))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Smallest `j` with `|c_j| > atol`; `0` means `c(t0) ≠ 0`.
pub fn vanishing_order(c: &Jet, atol: f64) -> Result<usize> {
    if c.order() < 1 {
        return Err(Error::OrderExhausted("vanishing order needs a jet of order ≥ 1".into()));
    }
    c.coeffs().iter().position(|x| x.abs() > atol).ok_or_else(|| {
        Error::Undetermined(format!("all {} coefficients are below {atol:e}", c.order() + 1))
    })
}

/// Frame jets `u = γ' / (k (t − t0)^{k−1})` at `t0`, obtained by shifting the
/// coefficients of `γ'`; the factor is `c = k (t − t0)^{k−1}`.
pub fn frame_from_degenerate(
    gamma: &[Expr],
    t0: f64,
    k: usize,
    order: usize,
    atol: f64,
) -> Result<(JetVector, Jet)> {
    if k == 0 {
        return Err(Error::DegeneracyMismatch("degeneracy order must be ≥ 1".into()));
    }
    let velocity = derivative_vec(&curve_jets(gamma, t0, order + k)?)?;
    let scale = velocity
        .iter()
        .flat_map(|j| j.coeffs().iter())
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(1.0);
    for j in 0..k - 1 {
        if let Some(bad) = velocity.iter().find(|v| v.coeff(j).abs() > atol * scale) {
            return Err(Error::DegeneracyMismatch(format!(
                "γ' has coefficient {j} = {} at t0 = {t0}, expected a zero of order {}",
                bad.coeff(j),
                k - 1
            )));
        }
    }
    if velocity.iter().all(|v| v.coeff(k - 1).abs() <= atol * scale) {
        return Err(Error::DegeneracyMismatch(format!(
            "γ' vanishes to order ≥ {k} at t0 = {t0}, expected exactly {}",
            k - 1
        )));
    }
    let u = shifted_frame(&velocity, k, order)?;
    Ok((u, degenerate_factor(t0, k, t0, order)?))
}

fn frame_from_degenerate_unchecked(gamma: &[Expr], t0: f64, k: usize, order: usize) -> Result<JetVector> {
    let velocity = derivative_vec(&curve_jets(gamma, t0, order + k)?)?;
    shifted_frame(&velocity, k, order)
}

fn shifted_frame(velocity: &[Jet], k: usize, order: usize) -> Result<JetVector> {
    velocity
        .iter()
        .map(|v| Ok(v.shift_down(k - 1)?.truncate(order).scale(1.0 / k as f64)))
        .collect()
}

/// First `k` with `∇^k γ(t0)` non-negligible relative to the largest chain entry.
pub fn detect_degeneracy(chain: &CovariantChain, rel_tol: f64) -> Result<usize> {
    let norms: Vec<f64> = chain.vectors.iter().map(|v| norm(v)).collect();
    let largest = norms.iter().cloned().fold(0.0, f64::max);
    if largest < ABS_FLOOR {
        return Err(Error::Undetermined(format!(
            "covariant chain vanishes up to order {}",
            chain.len()
        )));
    }
    Ok(norms.iter().position(|&n| n > rel_tol * largest).expect("largest entry qualifies") + 1)
}

/// One entry of a ∇-type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeEntry {
    Order(usize),
    /// The rank was not reached within the available derivatives.
    Undetermined,
}

/// `(b_1, …, b_m)`: `b_i` is the first `k` with `rank(w, ∇w, …, ∇^{k−1}w) = i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NablaType {
    pub entries: Vec<TypeEntry>,
    pub t0: f64,
    /// Smallest distance of any rank decision from the tolerance, as a ratio (≥ 1).
    pub margin: f64,
}

impl NablaType {
    pub fn is_determinate(&self) -> bool {
        self.entries.iter().all(|e| matches!(e, TypeEntry::Order(_)))
    }

    /// Entries as integers, if all are determinate.
    pub fn orders(&self) -> Option<Vec<usize>> {
        self.entries
            .iter()
            .map(|e| match e {
                TypeEntry::Order(k) => Some(*k),
                TypeEntry::Undetermined => None,
            })
            .collect()
    }

    /// Adds `shift` to every determinate entry.
    pub fn shifted(&self, shift: usize) -> Vec<TypeEntry> {
        self.entries
            .iter()
            .map(|e| match e {
                TypeEntry::Order(k) => TypeEntry::Order(k + shift),
                TypeEntry::Undetermined => TypeEntry::Undetermined,
            })
            .collect()
    }
}

impl fmt::Display for NablaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match e {
                TypeEntry::Order(k) => write!(f, "{k}")?,
                TypeEntry::Undetermined => f.write_str("?")?,
            }
        }
        f.write_str(")")
    }
}

/// ∇-type from the sequence `w(t0), (∇w)(t0), …` of vectors in `ℝ^dim`.
pub fn type_from_vectors(vectors: &[Vec<f64>], dim: usize, t0: f64, rel_tol: f64) -> NablaType {
    let mut entries = Vec::with_capacity(dim);
    let mut margin = f64::INFINITY;
    // Ranks are taken on directions so that a short leading vector (near a zero of the
    // frame factor) neither counts as rank 1 when negligible nor spoils later ranks.
    let scale = vectors.iter().take(dim + 1).map(|v| norm(v)).fold(0.0, f64::max);
    let (dirs, _) = directions(vectors, rel_tol, scale);
    let flag = flag_rank(&dirs, rel_tol);
    let mut used = 0;
    for (k, res) in flag.residuals.iter().enumerate() {
        if entries.len() == dim {
            break;
        }
        used = k + 1;
        if *res > rel_tol {
            entries.push(TypeEntry::Order(k + 1));
        }
        if dirs[k].iter().any(|x| *x != 0.0) {
            margin = margin.min(if *res > rel_tol { res / rel_tol } else { rel_tol / res.max(f64::MIN_POSITIVE) });
        }
    }
    margin = margin.min(directions(&vectors[..used], rel_tol, scale).1);
    entries.resize(dim, TypeEntry::Undetermined);
    NablaType { entries, t0, margin }
}

/// ∇-type of the field `w` along the curve with position jets `position`, using
/// `w, ∇w, …, ∇^{max_order−1} w`.
pub fn field_nabla_type(
    gamma: &ChristoffelField,
    position: &[Jet],
    w: &[Jet],
    max_order: usize,
    rel_tol: f64,
) -> Result<NablaType> {
    let along = AlongCurve::new(gamma, position)?;
    let vectors = along.iterated_values(w, max_order)?;
    let t0 = position.first().map_or(0.0, Jet::base);
    Ok(type_from_vectors(&vectors, gamma.dim(), t0, rel_tol))
}

/// ∇-type of the velocity field `γ'`.
pub fn curve_nabla_type(
    gamma: &ChristoffelField,
    curve: &[Expr],
    t0: f64,
    max_order: usize,
    rel_tol: f64,
) -> Result<NablaType> {
    let chain = covariant_chain(gamma, curve, t0, max_order)?;
    Ok(type_from_vectors(&chain.vectors, gamma.dim(), t0, rel_tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exprs(src: &[&str]) -> Vec<Expr> {
        src.iter().map(|s| parse_expr(s, curve_variables()).unwrap()).collect()
    }

    fn orders(t: &NablaType) -> Vec<usize> {
        t.orders().expect("determinate")
    }

    #[test]
    fn vanishing_order_examples() {
        assert_eq!(vanishing_order(&Jet::variable(0.0, 8), DEFAULT_ATOL).unwrap(), 1);
        let one_plus_t = Jet::variable(0.0, 8).add(&Jet::constant(1.0, 8, 0.0));
        assert_eq!(vanishing_order(&one_plus_t, DEFAULT_ATOL).unwrap(), 0);
        assert!(matches!(
            vanishing_order(&Jet::zero(8, 0.0), DEFAULT_ATOL),
            Err(Error::Undetermined(_))
        ));
    }

    #[test]
    fn degenerate_frame_of_swallowtail_curve() {
        let g = exprs(&["t^2", "t^3", "t^4"]);
        let (u, c) = frame_from_degenerate(&g, 0.0, 2, 4, DEFAULT_ATOL).unwrap();
        assert_eq!(u[0].coeffs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(u[1].coeffs(), &[0.0, 1.5, 0.0, 0.0, 0.0]);
        assert_eq!(u[2].coeffs(), &[0.0, 0.0, 2.0, 0.0, 0.0]);
        assert_eq!(c.coeffs(), &[0.0, 2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn immersed_point_frame_is_velocity() {
        let g = exprs(&["t", "t^2", "t^3"]);
        let (u, c) = frame_from_degenerate(&g, 0.5, 1, 3, DEFAULT_ATOL).unwrap();
        let vel = derivative_vec(&curve_jets(&g, 0.5, 4).unwrap()).unwrap();
        assert_eq!(u, vel);
        assert_eq!(c.coeffs(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn degeneracy_mismatch() {
        let g = exprs(&["t^2", "t^3", "t^4"]);
        assert!(matches!(
            frame_from_degenerate(&g, 0.0, 1, 3, DEFAULT_ATOL),
            Err(Error::DegeneracyMismatch(_))
        ));
        assert!(matches!(
            frame_from_degenerate(&g, 0.0, 3, 3, DEFAULT_ATOL),
            Err(Error::DegeneracyMismatch(_))
        ));
    }

    #[test]
    fn degenerate_frame_away_from_anchor_matches_closed_form() {
        let curve = DirectedCurve::from_sources(&["t^2", "t^3", "t^4"], None, (-1.0, 1.0))
            .unwrap();
        let curve = DirectedCurve { frame: Frame::Degenerate { t0: 0.0, k: 2 }, ..curve };
        for t in [-0.7, -0.04, 0.0, 0.01, 0.3] {
            let fj = curve.frame_jets(t, 2).unwrap();
            let expected = [1.0, 1.5 * t, 2.0 * t * t];
            let expected_d = [0.0, 1.5, 4.0 * t];
            for i in 0..3 {
                assert!((fj.frame[i].value() - expected[i]).abs() < 1e-14, "t={t}");
                assert!((fj.frame[i].coeff(1) - expected_d[i]).abs() < 1e-13, "t={t}");
            }
            assert!((fj.factor.value() - 2.0 * t).abs() < 1e-15);
        }
    }

    #[test]
    fn explicit_frame_without_factor_recovers_it() {
        let curve = DirectedCurve::from_sources(
            &["t^2", "t^3", "t^4"],
            Some((&["1", "1.5*t", "2*t^2"], None)),
            (-1.0, 1.0),
        )
        .unwrap();
        let fj = curve.frame_jets(0.3, 3).unwrap();
        assert!((fj.factor.value() - 0.6).abs() < 1e-15);
        assert!((fj.factor.coeff(1) - 2.0).abs() < 1e-14);
        curve.validate().unwrap();
    }

    #[test]
    fn validation_catches_inconsistent_frame() {
        let curve = DirectedCurve::from_sources(
            &["t^2", "t^3", "t^4"],
            Some((&["1", "t", "2*t^2"], Some("2*t"))),
            (-1.0, 1.0),
        )
        .unwrap();
        assert!(matches!(curve.validate(), Err(Error::Validation(_))));
        let constant = DirectedCurve::from_sources(&["1", "2", "3"], None, (0.0, 1.0)).unwrap();
        assert!(constant.validate().is_err());
    }

    #[test]
    fn flat_curve_types() {
        let flat = ChristoffelField::flat(3);
        let ty = |src: &[&str]| curve_nabla_type(&flat, &exprs(src), 0.0, 8, 1e-9).unwrap();
        assert_eq!(orders(&ty(&["t", "t^2", "t^3"])), vec![1, 2, 3]);
        assert_eq!(orders(&ty(&["t^2", "t^3", "t^4"])), vec![2, 3, 4]);
        assert_eq!(orders(&ty(&["t", "t^2", "t^4"])), vec![1, 2, 4]);
        let planar = ty(&["t", "t^2", "0"]);
        assert_eq!(planar.entries[2], TypeEntry::Undetermined);
        assert_eq!(planar.to_string(), "(1,2,?)");
    }

    #[test]
    fn flat_field_types() {
        let flat = ChristoffelField::flat(3);
        let position = curve_jets(&exprs(&["t", "t^2", "t^3"]), 0.0, 8).unwrap();
        let field = |src: &[&str]| curve_jets(&exprs(src), 0.0, 7).unwrap();
        let t1 = field_nabla_type(&flat, &position, &field(&["1", "t", "t^2"]), 7, 1e-9).unwrap();
        assert_eq!(orders(&t1), vec![1, 2, 3]);
        let t2 = field_nabla_type(&flat, &position, &field(&["1", "t", "t^3"]), 7, 1e-9).unwrap();
        assert_eq!(orders(&t2), vec![1, 2, 4]);
    }
}

//! Singularity classification of ∇-tangent surfaces along a curve.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{covariant_chain, ChristoffelField, CovariantChain};
use crate::curve::{
    detect_degeneracy, frame_from_degenerate, norm, type_from_vectors, vanishing_order, DirectedCurve, Frame,
    NablaType, DEFAULT_ATOL,
};
use crate::error::{Error, Result};
use crate::surface::frame_derivatives;

/// Largest singular values below this mean the vector set is numerically zero.
pub const ABS_FLOOR: f64 = 1e-14;
/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Margins are reported capped at this value.
const MARGIN_CAP: f64 = 1e12;

/// Singular values, largest first, of the matrix whose columns are `vectors`.
pub fn singular_values(vectors: &[Vec<f64>]) -> Vec<f64> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let rows = vectors[0].len();
    let m = DMatrix::from_fn(rows, vectors.len(), |i, j| vectors[j][i]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// A rank decision with its evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDecision {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub rel_tol: f64,
    /// How far the closest singular value sits from the threshold, as a ratio ≥ 1.
    pub margin: f64,
    /// Distances to the running span, for flag rank tests.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<f64>,
}

pub fn rank_decision(vectors: &[Vec<f64>], rel_tol: f64) -> RankDecision {
    let sv = singular_values(vectors);
    let largest = sv.first().copied().unwrap_or(0.0);
    if largest < ABS_FLOOR {
        return RankDecision { rank: 0, singular_values: sv, rel_tol, margin: MARGIN_CAP, residuals: Vec::new() };
    }
    let threshold = rel_tol * largest;
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    if rank == 0 {
        let top = sv.first().copied().unwrap_or(0.0);
        let margin = (threshold / top.max(f64::MIN_POSITIVE)).min(MARGIN_CAP);
        return RankDecision { rank, singular_values: sv, rel_tol, margin, residuals: Vec::new() };
    }
    let kept = sv[rank - 1] / threshold;
    let dropped = sv.get(rank).map_or(f64::INFINITY, |&s| threshold / s.max(f64::MIN_POSITIVE));
    let margin = kept.min(dropped).min(MARGIN_CAP);
    RankDecision { rank, singular_values: sv, rel_tol, margin, residuals: Vec::new() }
}

/// Direction vectors for flag rank tests: entries with norm at most `zero_tol × scale`
/// (or below [`ABS_FLOOR`]) become zero, the rest are normalized. The returned margin
/// is the smallest distance of any norm from that cut, as a ratio.
pub fn directions(vectors: &[Vec<f64>], zero_tol: f64, scale: f64) -> (Vec<Vec<f64>>, f64) {
    let cut = (zero_tol * scale).max(ABS_FLOOR);
    let mut margin = MARGIN_CAP;
    let dirs = vectors
        .iter()
        .map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n <= cut {
                margin = margin.min(cut / n.max(f64::MIN_POSITIVE));
                vec![0.0; v.len()]
            } else {
                margin = margin.min(n / cut);
                v.iter().map(|x| x / n).collect()
            }
        })
        .collect();
    (dirs, margin)
}

/// Flag rank of unit (or zero) vectors taken in order: a vector raises the rank when
/// its distance to the span of the accepted ones exceeds `rel_tol`. Those distances
/// are recorded in `residuals`; `singular_values` are kept as evidence.
pub fn flag_rank(dirs: &[Vec<f64>], rel_tol: f64) -> RankDecision {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut residuals = Vec::with_capacity(dirs.len());
    let mut margin = MARGIN_CAP;
    for d in dirs {
        let mut r = d.clone();
        // Two passes of classical Gram–Schmidt.
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= dot * qi;
                }
            }
        }
        let res = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let is_zero = d.iter().all(|x| *x == 0.0);
        if !is_zero {
            margin = margin.min(if res > rel_tol { res / rel_tol } else { rel_tol / res.max(f64::MIN_POSITIVE) });
        }
        if res > rel_tol {
            basis.push(r.iter().map(|x| x / res).collect());
        }
        residuals.push(res);
    }
    RankDecision {
        rank: basis.len(),
        singular_values: singular_values(dirs),
        rel_tol,
        margin: margin.min(MARGIN_CAP),
        residuals,
    }
}

/// Number of singular values above `rel_tol × largest`; zero when the largest is
/// below [`ABS_FLOOR`].
pub fn rank_tol(vectors: &[Vec<f64>], rel_tol: f64) -> usize {
    rank_decision(vectors, rel_tol).rank
}


pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SingularityClass {
    CuspidalEdge,
    FoldedUmbrella,
    Swallowtail,
    OpenSwallowtail,
    NonGeneric,
}

impl SingularityClass {
    pub fn name(self) -> &'static str {
        match self {
            SingularityClass::CuspidalEdge => "CuspidalEdge",
            SingularityClass::FoldedUmbrella => "FoldedUmbrella",
            SingularityClass::Swallowtail => "Swallowtail",
            SingularityClass::OpenSwallowtail => "OpenSwallowtail",
            SingularityClass::NonGeneric => "NonGeneric",
        }
    }
}

impl fmt::Display for SingularityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Relative rank tolerance.
    pub rel_tol: f64,
    /// `D1 ≈ 0` when `‖D1‖ < zero_tol · max_k ‖D_k‖`.
    pub zero_tol: f64,
    /// Jet order used for the covariant chain.
    pub jet_order: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { rel_tol: DEFAULT_RANK_TOL, zero_tol: 1e-9, jet_order: 8 }
    }
}

/// One rank test applied by the classifier, e.g. `rank{D1,D2,D3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTest {
    pub vectors: String,
    pub decision: RankDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub schema_version: u32,
    pub t0: f64,
    pub dim: usize,
    pub degeneracy_order: Option<usize>,
    pub nabla_type: NablaType,
    pub class: SingularityClass,
    pub reason: Option<String>,
    /// `D[1..5]` (fewer when the jet order is lower).
    pub chain: Vec<Vec<f64>>,
    pub rank_tests: Vec<RankTest>,
    pub rel_tol: f64,
    pub zero_tol: f64,
    pub connection: String,
    pub curve: String,
}

impl ClassificationReport {
    pub fn margin(&self) -> f64 {
        self.rank_tests.iter().map(|r| r.decision.margin).fold(MARGIN_CAP, f64::min)
    }
}

struct Tester<'a> {
    vectors: &'a [Vec<f64>],
    rel_tol: f64,
    label: &'static str,
    tests: Vec<RankTest>,
}

impl Tester<'_> {
    /// Rank of the 1-based indices `idx`.
    fn rank(&mut self, idx: &[usize]) -> Option<usize> {
        if idx.iter().any(|&i| i == 0 || i > self.vectors.len()) {
            return None;
        }
        let vs: Vec<Vec<f64>> = idx.iter().map(|&i| self.vectors[i - 1].clone()).collect();
        let decision = flag_rank(&vs, self.rel_tol);
        let names: Vec<String> = idx.iter().map(|i| format!("{}{}", self.label, i)).collect();
        let rank = decision.rank;
        self.tests.push(RankTest { vectors: names.join(","), decision });
        Some(rank)
    }
}

fn curve_label(curve: &DirectedCurve) -> String {
    if !curve.label.is_empty() {
        return curve.label.clone();
    }
    let parts: Vec<String> = curve.gamma.iter().map(|e| e.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// Decision tree on the covariant chain `D[k] = ∇^kγ(t0)`.
fn decide(
    chain: &[Vec<f64>],
    dim: usize,
    opts: &ClassifyOptions,
) -> (SingularityClass, Option<String>, Vec<RankTest>) {
    use SingularityClass::*;
    let shown = &chain[..chain.len().min(5)];
    let largest = shown.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let d1_zero = chain.first().is_some_and(|d1| norm(d1) < opts.zero_tol * largest);
    let (dirs, _) = directions(shown, opts.zero_tol, largest);
    let mut t = Tester { vectors: &dirs, rel_tol: opts.rel_tol, label: "D", tests: Vec::new() };
    let class = if t.rank(&[1, 2, 3]) == Some(3) {
        Some(CuspidalEdge)
    } else if dim == 3 {
        if !d1_zero && t.rank(&[1, 2, 4]) == Some(3) {
            Some(FoldedUmbrella)
        } else if d1_zero && t.rank(&[2, 3, 4]) == Some(3) {
            Some(Swallowtail)
        } else {
            None
        }
    } else if d1_zero && t.rank(&[2, 3, 4, 5]) == Some(4) {
        Some(OpenSwallowtail)
    } else {
        None
    };
    match class {
        Some(c) => (c, None, t.tests),
        None => {
            let pattern: Vec<String> =
                t.tests.iter().map(|r| format!("rank{{{}}} = {}", r.vectors, r.decision.rank)).collect();
            let reason = format!(
                "rank pattern outside the classified cases ({}; D1 {})",
                pattern.join(", "),
                if d1_zero { "≈ 0" } else { "≠ 0" }
            );
            (NonGeneric, Some(reason), t.tests)
        }
    }
}

/// Classifies the tangent-surface germ at `γ(t0)` from the covariant chain of the
/// symmetrized connection.
pub fn classify_point(
    gamma: &ChristoffelField,
    curve: &DirectedCurve,
    t0: f64,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport> {
    let dim = gamma.dim();
    if dim < 3 {
        return Err(Error::DimensionMismatch(format!("classification needs m ≥ 3, got {dim}")));
    }
    if curve.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "curve has {} components, connection dimension is {dim}",
            curve.dim()
        )));
    }
    let sym = gamma.symmetrize();
    let chain = covariant_chain(&sym, &curve.gamma, t0, opts.jet_order.max(5))?;
    Ok(report_from_chain(&chain, dim, opts, gamma.label(), &curve_label(curve)))
}

/// Builds the report for a precomputed chain of a symmetric connection.
pub fn report_from_chain(
    chain: &CovariantChain,
    dim: usize,
    opts: &ClassifyOptions,
    connection: &str,
    curve: &str,
) -> ClassificationReport {
    let nabla_type = type_from_vectors(&chain.vectors, dim, chain.t0, opts.rel_tol);
    let shown: Vec<Vec<f64>> = chain.vectors.iter().take(5).cloned().collect();
    let base = |class, reason, rank_tests, k| ClassificationReport {
        schema_version: SCHEMA_VERSION,
        t0: chain.t0,
        dim,
        degeneracy_order: k,
        nabla_type: nabla_type.clone(),
        class,
        reason,
        chain: shown.clone(),
        rank_tests,
        rel_tol: opts.rel_tol,
        zero_tol: opts.zero_tol,
        connection: connection.to_string(),
        curve: curve.to_string(),
    };
    match detect_degeneracy(chain, opts.zero_tol) {
        Err(e) => base(SingularityClass::NonGeneric, Some(e.to_string()), Vec::new(), None),
        Ok(k) => {
            let (class, reason, tests) = decide(&chain.vectors, dim, opts);
            base(class, reason, tests, Some(k))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub t0: f64,
    pub degeneracy_order: usize,
    pub class: SingularityClass,
    /// `u, ∇u, ∇²u, ∇³u` at `t0`.
    pub frame_vectors: Vec<Vec<f64>>,
    pub rank_tests: Vec<RankTest>,
}

/// Classifies through the frontal frame `V1 = u`, `V2 = ∇u` and the η-derivatives
/// `∇²u`, `∇³u` instead of the covariant chain of `γ`.
pub fn classify_via_frames(
    gamma: &ChristoffelField,
    curve: &DirectedCurve,
    t0: f64,
    opts: &ClassifyOptions,
) -> Result<FrameReport> {
    use SingularityClass::*;
    let dim = gamma.dim();
    if dim < 3 || curve.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "frame classification needs a curve in m ≥ 3 matching the connection (curve {}, connection {dim})",
            curve.dim()
        )));
    }
    let sym = gamma.symmetrize();
    let chain = covariant_chain(&sym, &curve.gamma, t0, opts.jet_order.max(5))?;
    let k = detect_degeneracy(&chain, opts.zero_tol)
        .map_err(|e| Error::FrameUnavailable(e.to_string()))?;
    let frame_vectors = frame_vectors_at(&sym, curve, t0, k)?;
    let scale = frame_vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    if norm(&frame_vectors[0]) <= opts.zero_tol * scale || scale < ABS_FLOOR {
        return Err(Error::FrameUnavailable(format!("frame vanishes at t0 = {t0}")));
    }
    let (dirs, _) = directions(&frame_vectors, opts.zero_tol, scale);
    let mut t = Tester { vectors: &dirs, rel_tol: opts.rel_tol, label: "U", tests: Vec::new() };
    let class = match k {
        1 => {
            if t.rank(&[1, 2, 3]) == Some(3) {
                CuspidalEdge
            } else if dim == 3 && t.rank(&[1, 2, 4]) == Some(3) {
                FoldedUmbrella
            } else {
                NonGeneric
            }
        }
        2 if dim == 3 => {
            if t.rank(&[1, 2, 3]) == Some(3) {
                Swallowtail
            } else {
                NonGeneric
            }
        }
        2 => {
            if t.rank(&[1, 2, 3, 4]) == Some(4) {
                OpenSwallowtail
            } else {
                NonGeneric
            }
        }
        _ => NonGeneric,
    };
    let rank_tests = t.tests;
    Ok(FrameReport { t0, degeneracy_order: k, class, frame_vectors, rank_tests })
}

fn frame_vectors_at(
    sym: &ChristoffelField,
    curve: &DirectedCurve,
    t0: f64,
    k: usize,
) -> Result<Vec<Vec<f64>>> {
    let user_frame = match &curve.frame {
        Frame::Velocity => k == 1,
        Frame::Explicit { .. } | Frame::Degenerate { .. } => true,
    };
    if user_frame {
        return frame_derivatives(sym, curve, t0, 4);
    }
    let (u, _) = frame_from_degenerate(&curve.gamma, t0, k, 3, DEFAULT_ATOL)
        .map_err(|e| Error::FrameUnavailable(e.to_string()))?;
    let position = curve.position_jets(t0, 4)?;
    let along = crate::connection::AlongCurve::new(sym, &position)?;
    along.iterated_values(&u, 4)
}

/// What located a scan event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Indicator {
    /// Sign change of `det(D1, D2, D3)` (m = 3).
    Determinant,
    /// Zero of the frame factor `c`.
    FrameFactor,
    /// Local minimum of `‖γ'‖` that is numerically zero.
    Velocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEvent {
    pub t: f64,
    pub class: SingularityClass,
    pub indicators: Vec<Indicator>,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanInterval {
    pub t_min: f64,
    pub t_max: f64,
    pub class: SingularityClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub t_range: (f64, f64),
    pub n_samples: usize,
    pub events: Vec<ScanEvent>,
    /// Classes between consecutive events, from a representative interior point.
    pub background: Vec<ScanInterval>,
}

const EVENT_MERGE: f64 = 1e-8;
const DETERMINANT_SNAP: f64 = 1e-4;

/// Root of `f` in `[a, b]` given `f(a) = fa`, `f(b) = fb` of opposite signs, refined by
/// the Illinois variant of false position down to adjacent floating-point values.
fn refine_root<F: Fn(f64) -> Option<f64>>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..200 {
        let width = b - a;
        if width <= 4.0 * f64::EPSILON * (a.abs().max(b.abs()).max(f64::MIN_POSITIVE)) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let Some(fx) = f(x) else { return x };
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

fn sign_roots<F: Fn(f64) -> Option<f64> + Sync>(f: &F, ts: &[f64]) -> Vec<f64> {
    let vals: Vec<Option<f64>> = ts.par_iter().map(|&t| f(t)).collect();
    let mut roots = Vec::new();
    for i in 0..ts.len() {
        if vals[i] == Some(0.0) {
            roots.push(ts[i]);
        }
        if i + 1 < ts.len() {
            if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
                if a != 0.0 && b != 0.0 && (a < 0.0) != (b < 0.0) {
                    roots.push(refine_root(f, ts[i], ts[i + 1], a, b));
                }
            }
        }
    }
    roots
}

fn local_minima<F: Fn(f64) -> Option<f64> + Sync>(f: &F, ts: &[f64]) -> Vec<(f64, f64)> {
    let vals: Vec<f64> = ts.par_iter().map(|&t| f(t).unwrap_or(f64::INFINITY)).collect();
    let mut out = Vec::new();
    for i in 0..ts.len() {
        let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < ts.len() { vals[i + 1] } else { f64::INFINITY };
        if vals[i] <= left && vals[i] <= right && vals[i].is_finite() {
            let (mut a, mut b) = (ts[i.saturating_sub(1)], ts[(i + 1).min(ts.len() - 1)]);
            let golden = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                if b - a <= f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
                    break;
                }
                let x1 = b - golden * (b - a);
                let x2 = a + golden * (b - a);
                let f1 = f(x1).unwrap_or(f64::INFINITY);
                let f2 = f(x2).unwrap_or(f64::INFINITY);
                if f1 <= f2 {
                    b = x2;
                } else {
                    a = x1;
                }
            }
            let t = 0.5 * (a + b);
            out.push((t, f(t).unwrap_or(f64::INFINITY)));
        }
    }
    out
}

/// Candidate points on the sample grid `ts`: sign changes of `det(D1, …, D_n)` when
/// `det_size = Some(n)` (requires `n = m`), zeros of the frame factor, and numerically
/// vanishing minima of `‖γ'‖`. Points closer than a relative `1e−8` are merged.
pub(crate) fn candidate_points(
    sym: &ChristoffelField,
    curve: &DirectedCurve,
    ts: &[f64],
    det_size: Option<usize>,
) -> Vec<(f64, Vec<Indicator>)> {
    let (lo, hi) = (ts[0], ts[ts.len() - 1]);
    let mut candidates: Vec<(f64, Indicator)> = Vec::new();

    if let Some(n) = det_size.filter(|&n| n == sym.dim()) {
        let det = |t: f64| {
            covariant_chain(sym, &curve.gamma, t, n + 1).ok().map(|c| {
                let m = DMatrix::from_fn(n, n, |i, j| c.vectors[j][i]);
                m.determinant()
            })
        };
        candidates.extend(sign_roots(&det, ts).into_iter().map(|t| (t, Indicator::Determinant)));
    }

    match &curve.frame {
        Frame::Explicit { c: Some(c), .. } => {
            let cf = |t: f64| c.eval_scalar(&[t]).ok();
            candidates.extend(sign_roots(&cf, ts).into_iter().map(|t| (t, Indicator::FrameFactor)));
        }
        Frame::Degenerate { t0, k } if *k > 1 && lo <= *t0 && *t0 <= hi => {
            candidates.push((*t0, Indicator::FrameFactor));
        }
        _ => {}
    }

    let speed = |t: f64| {
        curve.position_jets(t, 1).ok().map(|p| norm(&p.iter().map(|j| j.coeff(1)).collect::<Vec<_>>()))
    };
    let scale = ts.iter().filter_map(|&t| speed(t)).fold(0.0, f64::max).max(ABS_FLOOR);
    for (t, v) in local_minima(&speed, ts) {
        if v < 1e-6 * scale {
            candidates.push((t, Indicator::Velocity));
        }
    }

    // Near a frame root det(D1, …, D_n) vanishes to odd order ≥ 3, so its bisected
    // root is only accurate to ~1e−6; attach it to the frame root instead.
    let anchors: Vec<f64> =
        candidates.iter().filter(|c| c.1 != Indicator::Determinant).map(|c| c.0).collect();
    let snap = DETERMINANT_SNAP * (hi - lo);
    for cand in candidates.iter_mut().filter(|c| c.1 == Indicator::Determinant) {
        if let Some(&a) = anchors.iter().find(|&&a| (a - cand.0).abs() < snap) {
            cand.0 = a;
        }
    }

    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, Vec<Indicator>)> = Vec::new();
    for (t, ind) in candidates {
        match groups.last_mut() {
            Some((t_prev, inds)) if (t - *t_prev).abs() < EVENT_MERGE * (1.0 + t.abs()) => {
                if !inds.contains(&ind) {
                    inds.push(ind);
                }
            }
            _ => groups.push((t, vec![ind])),
        }
    }
    groups
}

/// Locates candidate non-cuspidal points on `t_range` and classifies them.
pub fn scan_curve(
    gamma: &ChristoffelField,
    curve: &DirectedCurve,
    t_range: (f64, f64),
    n_samples: usize,
    opts: &ClassifyOptions,
) -> Result<ScanReport> {
    let (lo, hi) = t_range;
    if !(lo < hi) || n_samples < 2 {
        return Err(Error::Validation(format!(
            "scan needs t_min < t_max and at least 2 samples, got [{lo}, {hi}] with {n_samples}"
        )));
    }
    let dim = gamma.dim();
    let sym = gamma.symmetrize();
    let ts = crate::surface::linspace(lo, hi, n_samples);
    let groups = candidate_points(&sym, curve, &ts, (dim == 3).then_some(3));

    let label = curve_label(curve);
    let events = groups
        .into_par_iter()
        .filter_map(|(t, indicators)| {
            let chain = covariant_chain(&sym, &curve.gamma, t, opts.jet_order.max(5)).ok()?;
            let report = report_from_chain(&chain, dim, opts, gamma.label(), &label);
            Some(ScanEvent { t, class: report.class, indicators, report })
        })
        .collect::<Vec<_>>();

    let mut cuts = vec![lo];
    cuts.extend(events.iter().map(|e| e.t).filter(|&t| t > lo && t < hi));
    cuts.push(hi);
    let background = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .filter_map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let chain = covariant_chain(&sym, &curve.gamma, mid, opts.jet_order.max(5)).ok()?;
            let report = report_from_chain(&chain, dim, opts, gamma.label(), &label);
            Some(ScanInterval { t_min: w[0], t_max: w[1], class: report.class })
        })
        .collect();

    Ok(ScanReport { schema_version: SCHEMA_VERSION, t_range, n_samples, events, background })
}

/// `a_1 − 1 + Σ_{i=2}^m (a_i − a_1 − i + 1)`.
pub fn codim(a: &[usize], m: usize) -> Result<usize> {
    if a.len() != m {
        return Err(Error::MalformedType(format!("type has {} entries, expected {m}", a.len())));
    }
    if a.first().is_none_or(|&a1| a1 < 1) {
        return Err(Error::MalformedType("entries must be positive".into()));
    }
    if a.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::MalformedType(format!("{a:?} is not strictly increasing")));
    }
    let a1 = a[0] as i64;
    let total = a1 - 1 + (2..=m).map(|i| a[i - 1] as i64 - a1 - i as i64 + 1).sum::<i64>();
    Ok(total as usize)
}

/// [`codim`] for a determinate [`NablaType`].
pub fn codim_of_type(t: &NablaType) -> Result<usize> {
    let orders = t
        .orders()
        .ok_or_else(|| Error::MalformedType(format!("{t} has undetermined entries")))?;
    codim(&orders, t.entries.len())
}

/// Vanishing order of the frame factor at `t0`, when the curve has one.
pub fn factor_order(curve: &DirectedCurve, t0: f64, order: usize) -> Result<usize> {
    let fj = curve.frame_jets(t0, order.max(1))?;
    vanishing_order(&fj.factor, DEFAULT_ATOL)
}

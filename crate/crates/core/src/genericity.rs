//! Monte Carlo check that random directed curves only exhibit the generic ∇-types.
//!
//! This samples a finite-dimensional polynomial family of curves; it is a heuristic
//! proxy for the open-dense statement about integral curves, not a proof of it.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    candidate_points, codim, report_from_chain, ClassifyOptions, Indicator, SingularityClass,
};
use crate::connection::{covariant_chain, preset, ChristoffelField};
use crate::curve::{norm, type_from_vectors, DirectedCurve, Frame};
use crate::error::{Error, Result};
use crate::surface::linspace;
use crate::symbolics::{curve_variables, parse_expr};

pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), seeded from spec.seed, stream = curve index";
const MAX_RESAMPLES: usize = 100;
const NEAR_DEGENERATE_MARGIN: f64 = 10.0;
const ROOT_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationSpec {
    pub seed: u64,
    pub dim: usize,
    /// Degree of the random frame polynomials.
    pub degree: usize,
    /// Amplitude of the polynomial part of the frame.
    pub amplitude: f64,
    pub n_curves: usize,
    pub samples_per_curve: usize,
    /// Connection preset; `random-poly` draws a fresh connection per curve.
    pub connection: String,
    /// Amplitude of the `random-poly` connection symbols.
    pub connection_amplitude: f64,
    pub domain: (f64, f64),
    pub rel_tol: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            seed: 1,
            dim: 3,
            degree: 5,
            amplitude: 1.0,
            n_curves: 100,
            samples_per_curve: 10,
            connection: "flat".into(),
            connection_amplitude: 0.2,
            domain: (-1.0, 1.0),
            rel_tol: crate::classify::DEFAULT_RANK_TOL,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(format!("perturbation spec: {msg}")));
        if self.dim < 3 {
            return bad(format!("dimension must be ≥ 3, got {}", self.dim));
        }
        if self.degree < self.dim + 1 {
            return bad(format!("degree {} must be at least m + 1 = {}", self.degree, self.dim + 1));
        }
        if !(self.amplitude >= 0.0) || !(self.connection_amplitude >= 0.0) {
            return bad("amplitudes must be non-negative".into());
        }
        if !(self.domain.0 < self.domain.1) {
            return bad(format!("empty domain {:?}", self.domain));
        }
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol must be positive".into());
        }
        if !crate::connection::PRESETS.contains(&self.connection.as_str()) {
            return bad(format!("unknown connection preset `{}`", self.connection));
        }
        Ok(())
    }

    /// Zero amplitude makes every frame constant, so the family is degenerate.
    pub fn is_degenerate(&self) -> bool {
        self.amplitude == 0.0
    }

    /// The generic ∇-types for this dimension.
    pub fn generic_types(&self) -> Vec<Vec<usize>> {
        generic_types(self.dim)
    }
}

/// `(1, …, m)`, `(1, …, m−1, m+1)` and `(2, …, m+1)`.
pub fn generic_types(m: usize) -> Vec<Vec<usize>> {
    let base: Vec<usize> = (1..=m).collect();
    let mut bumped = base.clone();
    bumped[m - 1] += 1;
    let shifted: Vec<usize> = (2..=m + 1).collect();
    vec![base, bumped, shifted]
}

/// Polynomial in `t`, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Antiderivative vanishing at 0, plus `constant`.
    fn integrate(&self, constant: f64) -> Poly {
        let mut out = vec![constant];
        out.extend(self.0.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
        Poly(out)
    }

    /// Horner-form source text.
    fn source(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.0.iter().enumerate().rev() {
            s = if i + 1 == self.0.len() { format!("{c:?}") } else { format!("{c:?} + t*({s})") };
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct RandomCurve {
    pub index: usize,
    pub curve: DirectedCurve,
    /// The root of `c`, when one was placed.
    pub t_star: Option<f64>,
    pub connection: ChristoffelField,
}

fn rng_for(spec: &PerturbationSpec, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    rng
}

fn connection_for(spec: &PerturbationSpec, index: usize) -> Result<ChristoffelField> {
    let seed = spec.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64);
    preset(&spec.connection, spec.dim, seed, spec.connection_amplitude)
}

/// Draws `(c, u)` and integrates `γ' = c·u` exactly. In half of the draws `c` has a
/// simple root `t*` inside the domain.
pub fn random_directed_curve(spec: &PerturbationSpec, index: usize) -> Result<RandomCurve> {
    spec.validate()?;
    let mut rng = rng_for(spec, index);
    draw_curve(spec, index, &mut rng)
}

fn draw_curve(spec: &PerturbationSpec, index: usize, rng: &mut ChaCha8Rng) -> Result<RandomCurve> {
    let m = spec.dim;
    let (lo, hi) = spec.domain;
    let probe = linspace(lo, hi, 201);
    let mut u = None;
    for _ in 0..MAX_RESAMPLES {
        let base: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let base_norm = norm(&base);
        let candidate: Vec<Poly> = (0..m)
            .map(|i| {
                let mut c: Vec<f64> =
                    (0..=spec.degree).map(|_| spec.amplitude * rng.random_range(-1.0..1.0)).collect();
                c[0] += base[i] / base_norm.max(f64::MIN_POSITIVE);
                Poly(c)
            })
            .collect();
        let norms: Vec<f64> = probe.iter().map(|&t| norm(&candidate.iter().map(|p| p.eval(t)).collect::<Vec<_>>())).collect();
        let largest = norms.iter().cloned().fold(0.0, f64::max);
        let smallest = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        if base_norm > 1e-3 && smallest > 0.05 * largest {
            u = Some(candidate);
            break;
        }
    }
    let u = u.ok_or_else(|| {
        Error::ResampleLimit(format!("frame kept vanishing after {MAX_RESAMPLES} draws (curve {index})"))
    })?;

    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let b: f64 = sign * rng.random_range(0.5..1.5);
    let beta = 0.2 * b.abs() * rng.random_range(-1.0..1.0);
    let (c, t_star) = if rng.random_bool(0.5) {
        let width = hi - lo;
        let t_star = rng.random_range(lo + 0.1 * width..hi - 0.1 * width);
        // c = (t − t*)(b + β (t − t*)); β is small enough that the second factor never vanishes.
        let lin = Poly(vec![-t_star, 1.0]);
        let second = Poly(vec![b - beta * t_star, beta]);
        (lin.mul(&second), Some(t_star))
    } else {
        (Poly(vec![b, 0.5 * beta]), None)
    };

    let mut gamma: Vec<Poly> = u.iter().map(|ui| c.mul(ui).integrate(0.0)).collect();
    if spec.connection == "hyperbolic-halfspace" {
        let last = &mut gamma[m - 1];
        let low = probe.iter().map(|&t| last.eval(t)).fold(f64::INFINITY, f64::min);
        last.0[0] += 1.0 - low.min(0.0);
    }

    let vars = curve_variables();
    let parse = |p: &Poly| parse_expr(&p.source(), vars.clone());
    let frame = Frame::Explicit {
        u: u.iter().map(parse).collect::<Result<_>>()?,
        c: Some(parse(&c)?),
    };
    let curve = DirectedCurve::new(gamma.iter().map(parse).collect::<Result<_>>()?, frame, spec.domain)
        .with_label(format!("random-{}-{index}", spec.seed));
    Ok(RandomCurve { index, curve, t_star, connection: connection_for(spec, index)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSource {
    Random,
    FrameRoot,
    DeterminantRoot,
}

impl SampleSource {
    fn name(self) -> &'static str {
        match self {
            SampleSource::Random => "random",
            SampleSource::FrameRoot => "frame-root",
            SampleSource::DeterminantRoot => "determinant-root",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub curve: usize,
    pub t: f64,
    pub source: SampleSource,
    pub nabla_type: String,
    pub orders: Option<Vec<usize>>,
    pub class: SingularityClass,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TypeHistogram {
    /// Determinate ∇-types, printed as `(b1,…,bm)`.
    pub types: BTreeMap<String, usize>,
    pub undetermined: usize,
    pub non_generic: usize,
    /// Determinate samples whose closest rank decision was within 10× of the
    /// tolerance; they are not entered in `types`.
    pub near_degenerate: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub schema_version: u32,
    pub note: String,
    pub rng: String,
    pub spec: PerturbationSpec,
    pub degenerate_spec: bool,
    pub histogram: TypeHistogram,
    pub classes: BTreeMap<String, usize>,
    pub generic_types: Vec<String>,
    /// Determinate types seen outside the generic list.
    pub outside_support: Vec<String>,
    pub fraction_generic: f64,
    /// Among randomly placed samples, the fraction of determinate types equal to `(1, …, m)`.
    pub random_full_rank_fraction: f64,
    pub codims: BTreeMap<String, usize>,
    pub worst_margin: f64,
    /// Located `c`-roots classified as (open) swallowtails whose type is not `(2, …, m+1)`.
    pub swallowtail_type_violations: usize,
    pub failed_curves: Vec<(usize, String)>,
}

fn type_label(orders: &[usize]) -> String {
    let parts: Vec<String> = orders.iter().map(|k| k.to_string()).collect();
    format!("({})", parts.join(","))
}

fn sample_point(
    sym: &ChristoffelField,
    rc: &RandomCurve,
    t: f64,
    source: SampleSource,
    opts: &ClassifyOptions,
) -> Result<Sample> {
    let dim = sym.dim();
    let chain = covariant_chain(sym, &rc.curve.gamma, t, opts.jet_order)?;
    let nabla = type_from_vectors(&chain.vectors, dim, t, opts.rel_tol);
    let report = report_from_chain(&chain, dim, opts, sym.label(), &rc.curve.label);
    let orders = nabla.orders();
    Ok(Sample {
        curve: rc.index,
        t,
        source,
        nabla_type: nabla.to_string(),
        orders,
        class: report.class,
        margin: nabla.margin.min(report.margin()),
    })
}

fn curve_samples(spec: &PerturbationSpec, index: usize, opts: &ClassifyOptions) -> Result<Vec<Sample>> {
    let mut rng = rng_for(spec, index);
    let rc = draw_curve(spec, index, &mut rng)?;
    let sym = rc.connection.symmetrize();
    let (lo, hi) = spec.domain;
    let mut out = Vec::new();
    for _ in 0..spec.samples_per_curve {
        let t = rng.random_range(lo..hi);
        out.push(sample_point(&sym, &rc, t, SampleSource::Random, opts)?);
    }
    let grid = linspace(lo, hi, ROOT_GRID);
    for (t, indicators) in candidate_points(&sym, &rc.curve, &grid, Some(spec.dim)) {
        let source = if indicators.contains(&Indicator::FrameFactor) || indicators.contains(&Indicator::Velocity) {
            SampleSource::FrameRoot
        } else {
            SampleSource::DeterminantRoot
        };
        out.push(sample_point(&sym, &rc, t, source, opts)?);
    }
    Ok(out)
}

/// Runs the experiment; curves are processed in parallel, each from its own RNG stream.
pub fn montecarlo_types(spec: &PerturbationSpec) -> Result<(MonteCarloReport, Vec<Sample>)> {
    spec.validate()?;
    let opts = ClassifyOptions { rel_tol: spec.rel_tol, ..ClassifyOptions::default() };
    let results: Vec<Result<Vec<Sample>>> =
        (0..spec.n_curves).into_par_iter().map(|i| curve_samples(spec, i, &opts)).collect();

    let mut samples = Vec::new();
    let mut failed_curves = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => samples.extend(s),
            Err(e) => failed_curves.push((i, e.to_string())),
        }
    }

    let generic: Vec<Vec<usize>> = spec.generic_types();
    let full: Vec<usize> = (1..=spec.dim).collect();
    let mut histogram = TypeHistogram { total: samples.len(), ..Default::default() };
    let mut classes = BTreeMap::new();
    let mut codims = BTreeMap::new();
    let mut outside = Vec::new();
    let (mut determinate, mut inside) = (0usize, 0usize);
    let (mut random_det, mut random_full) = (0usize, 0usize);
    let mut worst_margin = f64::INFINITY;
    let mut violations = 0;
    let shifted: Vec<usize> = (2..=spec.dim + 1).collect();

    for s in &samples {
        *classes.entry(s.class.name().to_string()).or_insert(0) += 1;
        if s.class == SingularityClass::NonGeneric {
            histogram.non_generic += 1;
        }
        worst_margin = worst_margin.min(s.margin);
        match &s.orders {
            None => histogram.undetermined += 1,
            Some(_) if s.margin < NEAR_DEGENERATE_MARGIN => histogram.near_degenerate += 1,
            Some(o) => {
                *histogram.types.entry(s.nabla_type.clone()).or_insert(0) += 1;
                determinate += 1;
                if generic.contains(o) {
                    inside += 1;
                } else if !outside.contains(&s.nabla_type) {
                    outside.push(s.nabla_type.clone());
                }
                if let Ok(c) = codim(o, spec.dim) {
                    codims.insert(s.nabla_type.clone(), c);
                }
                if s.source == SampleSource::Random {
                    random_det += 1;
                    if *o == full {
                        random_full += 1;
                    }
                }
            }
        }
        let swallowtail = matches!(s.class, SingularityClass::Swallowtail | SingularityClass::OpenSwallowtail);
        if s.source == SampleSource::FrameRoot && swallowtail && s.orders.as_ref() != Some(&shifted) {
            violations += 1;
        }
    }

    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    let report = MonteCarloReport {
        schema_version: crate::classify::SCHEMA_VERSION,
        note: "support-inclusion proxy over a random polynomial family; not a density statement".into(),
        rng: RNG_NAME.into(),
        spec: spec.clone(),
        degenerate_spec: spec.is_degenerate(),
        histogram,
        classes,
        generic_types: generic.iter().map(|g| type_label(g)).collect(),
        outside_support: outside,
        fraction_generic: ratio(inside, determinate),
        random_full_rank_fraction: ratio(random_full, random_det),
        codims,
        worst_margin: if worst_margin.is_finite() { worst_margin } else { 0.0 },
        swallowtail_type_violations: violations,
        failed_curves,
    };
    Ok((report, samples))
}

/// One row per sample: `curve,t,source,type,class,margin`.
pub fn write_samples_csv(samples: &[Sample], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "curve,t,source,type,class,margin")?;
    for s in samples {
        writeln!(
            out,
            "{},{:?},{},\"{}\",{},{:e}",
            s.curve,
            s.t,
            s.source.name(),
            s.nabla_type,
            s.class.name(),
            s.margin
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolics::Jet;

    #[test]
    fn poly_helpers() {
        let p = Poly(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 9.0);
        assert_eq!(p.mul(&Poly(vec![0.0, 1.0])).0, vec![0.0, 1.0, -2.0, 3.0]);
        assert_eq!(p.integrate(5.0).0, vec![5.0, 1.0, -1.0, 1.0]);
        let e = parse_expr(&p.source(), curve_variables()).unwrap();
        assert_eq!(e.eval_scalar(&[2.0]).unwrap(), 9.0);
    }

    #[test]
    fn generic_lists() {
        assert_eq!(generic_types(3), vec![vec![1, 2, 3], vec![1, 2, 4], vec![2, 3, 4]]);
        assert_eq!(generic_types(4)[1], vec![1, 2, 3, 5]);
    }

    #[test]
    fn spec_validation() {
        let spec = PerturbationSpec { degree: 3, ..Default::default() };
        assert!(matches!(spec.validate(), Err(Error::Validation(_))));
        let spec = PerturbationSpec { connection: "nope".into(), ..Default::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn curves_are_deterministic_and_directed() {
        let spec = PerturbationSpec { connection: "random-poly".into(), ..Default::default() };
        for i in 0..6 {
            let a = random_directed_curve(&spec, i).unwrap();
            let b = random_directed_curve(&spec, i).unwrap();
            assert_eq!(a.curve, b.curve);
            assert_eq!(a.t_star, b.t_star);
            a.curve.validate().unwrap();
        }
    }

    #[test]
    fn zero_amplitude_gives_constant_frame() {
        let spec = PerturbationSpec { amplitude: 0.0, ..Default::default() };
        assert!(spec.is_degenerate());
        let rc = random_directed_curve(&spec, 3).unwrap();
        let a = rc.curve.frame_jets(-0.5, 2).unwrap();
        let b = rc.curve.frame_jets(0.7, 2).unwrap();
        for (x, y) in a.frame.iter().zip(&b.frame) {
            assert!((x.value() - y.value()).abs() < 1e-15);
            assert_eq!(x.coeff(1), 0.0);
        }
    }

    #[test]
    fn frame_root_shifts_type() {
        let spec = PerturbationSpec::default();
        let rc = (0..20)
            .map(|i| random_directed_curve(&spec, i).unwrap())
            .find(|rc| rc.t_star.is_some())
            .unwrap();
        let t = rc.t_star.unwrap();
        let flat = ChristoffelField::flat(3);
        let fj = rc.curve.frame_jets(t, 8).unwrap();
        let position: Vec<Jet> = fj.position.clone();
        let u_type = crate::curve::field_nabla_type(&flat, &position, &fj.frame, 8, 1e-9).unwrap();
        let gamma_type = crate::curve::curve_nabla_type(&flat, &rc.curve.gamma, t, 8, 1e-9).unwrap();
        assert_eq!(gamma_type.entries, u_type.shifted(1));
    }

    #[test]
    fn small_run_is_reproducible() {
        let spec = PerturbationSpec { n_curves: 12, samples_per_curve: 4, ..Default::default() };
        let (a, sa) = montecarlo_types(&spec).unwrap();
        let (b, sb) = montecarlo_types(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert!(a.outside_support.is_empty(), "{:?}", a.outside_support);
        assert!(a.failed_curves.is_empty());
    }
}

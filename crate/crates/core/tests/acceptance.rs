//! Acceptance suite. Runs without the libtest harness and prints one line per
//! criterion; exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{dist, exprs, norm, owned_exprs, poly_source, random_vec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tansurf::classify::{classify_point, classify_via_frames, codim, ClassifyOptions, SingularityClass};
use tansurf::connection::{
    covariant_chain, curve_jets, hyperbolic_halfspace, random_poly, sphere_stereographic, ChristoffelField,
};
use tansurf::curve::{field_nabla_type, DirectedCurve, Frame};
use tansurf::genericity::{montecarlo_types, random_directed_curve, PerturbationSpec};
use tansurf::geodesic::{geodesic_point, integrate_geodesic, IntegratorOptions};
use tansurf::normal_forms::{germ_eval, model_curve, GermKind};
use tansurf::surface::{eval_surface, frame_derivatives, frontal_frame, linspace, singular_locus, wedge};
use tansurf::symbolics::jet::factorial;
use tansurf::symbolics::{curve_variables, parse_expr, Jet};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

const MODELS: [GermKind; 4] =
    [GermKind::CuspidalEdge(3), GermKind::FoldedUmbrella, GermKind::Swallowtail, GermKind::OpenSwallowtail(4)];

fn tight() -> IntegratorOptions {
    IntegratorOptions::with_tolerance(1e-12)
}

fn germ_reproduction() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for kind in MODELS {
        let curve = model_curve(kind).unwrap();
        let flat = ChristoffelField::flat(kind.dim());
        let grid = eval_surface(&flat, &curve, (-1.0, 1.0), (-1.0, 1.0), 101, 101, &IntegratorOptions::default())
            .unwrap();
        if !grid.failed_columns().is_empty() {
            return outcome(false, format!("{kind}: failed columns"));
        }
        for (i, &t) in grid.t.iter().enumerate() {
            for (j, &s) in grid.s.iter().enumerate() {
                let want = germ_eval(kind, t, s).unwrap();
                worst = worst.max(dist(&grid.point(i, j).unwrap().point, &want));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-12 && elapsed < Duration::from_secs(5),
        format!("max error {worst:.2e} on 4 × 101² nodes in {}", secs(elapsed)),
    )
}

fn classifier_fixtures() -> Outcome {
    use SingularityClass::*;
    let start = Instant::now();
    let opts = ClassifyOptions::default();
    let mut cases: Vec<(DirectedCurve, SingularityClass)> =
        MODELS.iter().map(|&k| (model_curve(k).unwrap(), k.class().unwrap())).collect();
    cases.push((DirectedCurve::new(exprs(&["t", "t^2", "t^3", "t^4"]), Frame::Velocity, (-1.0, 1.0)), CuspidalEdge));
    let mut wrong = Vec::new();
    for (curve, want) in &cases {
        let got = classify_point(&ChristoffelField::flat(curve.dim()), curve, 0.0, &opts).unwrap().class;
        if got != *want {
            wrong.push(format!("{}: {got} ≠ {want}", curve.label));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        wrong.is_empty() && elapsed < Duration::from_secs(1),
        if wrong.is_empty() { format!("5 fixtures in {}", secs(elapsed)) } else { wrong.join("; ") },
    )
}

/// `γ = p + Σ_j a_j (t − t0)^{k+j}`, with `γ³ ≥ 1.5` near `t0` when `lift` is set.
fn degenerate_curve(rng: &mut ChaCha8Rng, k: usize, t0: f64, lift: bool) -> Vec<String> {
    (0..3)
        .map(|i| {
            let mut coeffs = vec![0.0; k + 4];
            coeffs[0] = if lift && i == 2 { 2.0 } else { rng.random_range(-1.0..1.0) };
            for c in coeffs.iter_mut().skip(k) {
                *c = rng.random_range(-1.0..1.0);
            }
            poly_source(&coeffs, t0)
        })
        .collect()
}

fn degenerate_frame_constants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (gamma, lift) in [(ChristoffelField::flat(3), false), (hyperbolic_halfspace(3), true)] {
        for k in [2usize, 3] {
            for _ in 0..5 {
                let t0: f64 = rng.random_range(-0.5..0.5);
                let src = degenerate_curve(&mut rng, k, t0, lift);
                let curve = DirectedCurve::new(owned_exprs(&src), Frame::Degenerate { t0, k }, (-1.0, 1.0));
                let frame = frame_derivatives(&gamma, &curve, t0, 4).unwrap();
                let chain = covariant_chain(&gamma, &curve.gamma, t0, 10).unwrap();
                for (l, u) in frame.iter().enumerate() {
                    let coef = factorial(l) / (k as f64 * factorial(k + l - 1));
                    let want: Vec<f64> = chain.d(k + l).iter().map(|x| coef * x).collect();
                    worst = worst.max(dist(u, &want) / norm(&want));
                    cases += 1;
                }
            }
        }
    }
    outcome(worst < 1e-6, format!("{cases} (k, ℓ) checks, worst relative error {worst:.2e}"))
}

fn shift_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let structured: [[&str; 3]; 3] = [["1", "t", "t^3"], ["1", "t^2", "t^3"], ["1", "t", "t^2"]];
    let mut mismatches = Vec::new();
    let mut seen = BTreeSet::new();
    const K: usize = 12;
    for case in 0..200 {
        let (gamma, lift) = match case % 4 {
            0 | 1 => (ChristoffelField::flat(3), false),
            2 => (hyperbolic_halfspace(3), true),
            _ => (random_poly(3, case as u64, 0.3), false),
        };
        let t0: f64 = rng.random_range(-0.5..0.5);
        let curve_src: Vec<String> = (0..3)
            .map(|i| {
                let mut c = random_vec(&mut rng, 5, 1.0);
                if lift && i == 2 {
                    c[0] = 3.0;
                }
                poly_source(&c, 0.0)
            })
            .collect();
        let u_src: Vec<String> = if case % 4 == 1 {
            // A linear image of a frame with a prescribed flat type.
            let pattern = structured[(case / 4) % 3];
            let a = random_vec(&mut rng, 9, 1.0);
            (0..3)
                .map(|r| {
                    let terms: Vec<String> = (0..3)
                        .map(|c| format!("({:?})*(({}) - ({}))", a[3 * r + c], pattern[c].replace('t', "(t - 0)"), 0))
                        .collect();
                    terms.join(" + ").replace("(t - 0)", &format!("(t - ({t0:?}))"))
                })
                .collect()
        } else {
            (0..3).map(|_| poly_source(&random_vec(&mut rng, 5, 1.0), 0.0)).collect()
        };
        let ell = case % 3;
        let b0 = rng.random_range(0.5..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let b1: f64 = rng.random_range(-1.0..1.0);
        let c_src = format!("(t - ({t0:?}))^{ell} * (({b0:?}) + ({b1:?})*(t - ({t0:?})))");

        let position = curve_jets(&owned_exprs(&curve_src), t0, K + 1).unwrap();
        let u = curve_jets(&owned_exprs(&u_src), t0, K).unwrap();
        let c = parse_expr(&c_src, curve_variables()).unwrap().eval_jet(&[Jet::variable(t0, K)], K).unwrap();
        let w: Vec<Jet> = u.iter().map(|x| x.mul(&c)).collect();
        let tu = field_nabla_type(&gamma, &position, &u, K + 1, 1e-9).unwrap();
        let tw = field_nabla_type(&gamma, &position, &w, K + 1, 1e-9).unwrap();
        seen.insert(tu.to_string());
        if tw.entries != tu.shifted(ell) {
            mismatches.push(format!("case {case}: {tw} vs {tu} + {ell}"));
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("200 cases, base types {}", seen.into_iter().collect::<Vec<_>>().join(" "))
        } else {
            mismatches.join("; ")
        },
    )
}

fn torsion_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let opts = ClassifyOptions::default();
    let spec = PerturbationSpec { seed: 77, n_curves: 50, ..Default::default() };
    let mut worst = 0.0f64;
    let mut verdicts = Vec::new();
    for i in 0..50 {
        let gamma = random_poly(3, 1000 + i as u64, 0.2);
        if gamma.is_torsion_free() {
            return outcome(false, format!("connection {i} is torsion-free"));
        }
        let sym = gamma.symmetrize();
        let x = random_vec(&mut rng, 3, 0.5);
        let v = random_vec(&mut rng, 3, 1.0);
        let a = geodesic_point(&gamma, &x, &v, 1.0, &tight()).unwrap().0;
        let b = geodesic_point(&sym, &x, &v, 1.0, &tight()).unwrap().0;
        worst = worst.max(dist(&a, &b));

        let rc = random_directed_curve(&spec, i).unwrap();
        let t0 = rc.t_star.unwrap_or(0.0);
        let p = classify_point(&gamma, &rc.curve, t0, &opts).unwrap().class;
        let q = classify_point(&sym, &rc.curve, t0, &opts).unwrap().class;
        if p != q {
            verdicts.push(format!("curve {i}: {p} vs {q}"));
        }
    }
    outcome(
        worst < 1e-6 && verdicts.is_empty(),
        format!("50 connections, max geodesic gap {worst:.2e}, {} verdict mismatches", verdicts.len()),
    )
}

fn singular_locus_check() -> Outcome {
    let n = 41;
    let h = 2.0 / (n - 1) as f64;
    let mut cases: Vec<(String, ChristoffelField, DirectedCurve, (f64, f64))> = MODELS
        .iter()
        .map(|&k| (k.to_string(), ChristoffelField::flat(k.dim()), model_curve(k).unwrap(), (-1.0, 1.0)))
        .collect();
    cases.push((
        "hyperbolic immersed".into(),
        hyperbolic_halfspace(3),
        DirectedCurve::new(exprs(&["t", "t^2", "2 + t^3"]), Frame::Velocity, (-1.0, 1.0)),
        (-0.5, 0.5),
    ));
    let mut problems = Vec::new();
    let mut flagged = 0;
    for (name, gamma, curve, s_range) in &cases {
        let grid = eval_surface(gamma, curve, (-1.0, 1.0), *s_range, n, n, &tight()).unwrap();
        let spacing = (s_range.1 - s_range.0) / (n - 1) as f64;
        let locus = singular_locus(&grid, 1e-6);
        flagged += locus.points.len();
        if locus.max_abs_s > spacing.min(h) + 1e-15 {
            problems.push(format!("{name}: flagged |s| = {}", locus.max_abs_s));
        }
        let zero_row = locus.points.iter().filter(|p| p.s == 0.0).count();
        if zero_row != n {
            problems.push(format!("{name}: {zero_row}/{n} nodes of s = 0 flagged"));
        }
    }
    outcome(problems.is_empty(), if problems.is_empty() { format!("5 surfaces, {flagged} flagged nodes") } else { problems.join("; ") })
}

fn frontal_limit() -> Outcome {
    let opts = tight();
    let mut worst_limit = 0.0f64;
    let cases = [
        (hyperbolic_halfspace(3), DirectedCurve::new(exprs(&["t", "t^2", "2 + t^3"]), Frame::Velocity, (-1.0, 1.0))),
        (
            sphere_stereographic(3),
            DirectedCurve::new(exprs(&["sin(t)", "0.5*t^2", "0.3*t - 0.2*t^3"]), Frame::Velocity, (-1.0, 1.0)),
        ),
        (
            hyperbolic_halfspace(3),
            DirectedCurve::new(
                exprs(&["t^2", "t^3", "2 + t^2 + 0.5*t^4"]),
                Frame::Explicit { u: exprs(&["1", "1.5*t", "1 + t^2"]), c: Some(exprs(&["2*t"])[0].clone()) },
                (-0.8, 0.8),
            ),
        ),
    ];
    for (gamma, curve) in &cases {
        for &t0 in &[-0.4, 0.0, 0.3] {
            let nu = frame_derivatives(gamma, curve, t0, 2).unwrap()[1].clone();
            // Neville extrapolation to s = 0 from s = 0.005 k, k = 1..4.
            let samples: Vec<Vec<f64>> =
                (1..=4).map(|k| frontal_frame(gamma, curve, t0, 0.005 * k as f64, &opts).unwrap().v2).collect();
            let limit: Vec<f64> = (0..3)
                .map(|c| {
                    let xs = [1.0, 2.0, 3.0, 4.0];
                    let mut p: Vec<f64> = samples.iter().map(|v| v[c]).collect();
                    for m in 1..4 {
                        for i in 0..4 - m {
                            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
                        }
                    }
                    p[0]
                })
                .collect();
            worst_limit = worst_limit.max(dist(&limit, &nu));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_wedge = 0.0f64;
    for i in 0..100 {
        let (gamma, curve) = &cases[i % cases.len()];
        let (lo, hi) = curve.domain;
        let t = rng.random_range(lo..hi);
        let s = rng.random_range(0.01..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let fr = frontal_frame(gamma, curve, t, s, &opts).unwrap();
        let lhs = wedge(&fr.df_dt, &fr.v1);
        let rhs: Vec<f64> = wedge(&fr.v1, &fr.v2).iter().map(|w| -s * w).collect();
        let scale = norm(&fr.df_dt) * norm(&fr.v1);
        worst_wedge = worst_wedge.max(dist(&lhs, &rhs) / scale);
    }
    outcome(
        worst_limit < 1e-6 && worst_wedge < 1e-8,
        format!("extrapolated |F − ∇u| ≤ {worst_limit:.2e}; wedge identity relative error ≤ {worst_wedge:.2e}"),
    )
}

fn cross_classifier() -> Outcome {
    let opts = ClassifyOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut disagreements = Vec::new();
    let mut classes = BTreeSet::new();
    let specs = [
        (PerturbationSpec { seed: 31, connection: "flat".into(), ..Default::default() }, 50),
        (PerturbationSpec { seed: 32, connection: "hyperbolic-halfspace".into(), ..Default::default() }, 25),
        (PerturbationSpec { seed: 33, connection: "random-poly".into(), ..Default::default() }, 25),
    ];
    for (spec, n) in &specs {
        for i in 0..*n {
            let rc = random_directed_curve(spec, i).unwrap();
            let t0 = rc.t_star.unwrap_or_else(|| rng.random_range(-0.9..0.9));
            let a = classify_point(&rc.connection, &rc.curve, t0, &opts).map(|r| r.class);
            let b = classify_via_frames(&rc.connection, &rc.curve, t0, &opts).map(|r| r.class);
            match (a, b) {
                (Ok(a), Ok(b)) if a == b => {
                    classes.insert(a.name());
                }
                (a, b) => disagreements.push(format!("{} at {t0}: {a:?} vs {b:?}", rc.curve.label)),
            }
        }
    }
    outcome(
        disagreements.is_empty(),
        if disagreements.is_empty() {
            format!("100 curves, classes {}", classes.into_iter().collect::<Vec<_>>().join(", "))
        } else {
            disagreements.join("; ")
        },
    )
}

fn genericity() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    let table = [(vec![1, 2, 3], 0), (vec![1, 2, 4], 1), (vec![2, 3, 4], 1), (vec![1, 3, 4], 2)];
    for (a, want) in &table {
        if codim(a, 3).unwrap() != *want {
            problems.push(format!("codim{a:?} ≠ {want}"));
        }
    }
    let runs = [
        (PerturbationSpec { seed: 1, dim: 3, degree: 5, n_curves: 1000, connection: "flat".into(), ..Default::default() }, [
            "(1,2,3)", "(1,2,4)", "(2,3,4)",
        ]
        .as_slice()),
        (
            PerturbationSpec { seed: 2, dim: 4, degree: 6, n_curves: 200, connection: "random-poly".into(), ..Default::default() },
            ["(1,2,3,4)", "(1,2,3,5)", "(2,3,4,5)"].as_slice(),
        ),
    ];
    let mut summary = Vec::new();
    for (spec, support) in &runs {
        let (report, samples) = montecarlo_types(spec).unwrap();
        for (ty, count) in &report.histogram.types {
            if !support.contains(&ty.as_str()) {
                problems.push(format!("m={}: type {ty} ×{count} outside support", spec.dim));
            }
        }
        for s in &samples {
            if let Some(o) = &s.orders {
                let c = codim(o, spec.dim).unwrap();
                if c > 1 && support.contains(&s.nabla_type.as_str()) {
                    problems.push(format!("codim {} for {}", c, s.nabla_type));
                }
            }
        }
        for (ty, c) in &report.codims {
            if support.contains(&ty.as_str()) && *c > 1 {
                problems.push(format!("codim({ty}) = {c}"));
            }
        }
        if !report.failed_curves.is_empty() {
            problems.push(format!("m={}: {} failed curves", spec.dim, report.failed_curves.len()));
        }
        summary.push(format!(
            "m={} N={}: {:?}, {} near-degenerate",
            spec.dim, spec.n_curves, report.histogram.types, report.histogram.near_degenerate
        ));
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(120) {
        problems.push(format!("took {}", secs(elapsed)));
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() { format!("{} in {}", summary.join("; "), secs(elapsed)) } else { problems.join("; ") },
    )
}

fn geodesic_accuracy() -> Outcome {
    let h = hyperbolic_halfspace(3);
    let vertical = geodesic_point(&h, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0], 1.0, &IntegratorOptions::default()).unwrap().0;
    let vertical_err = dist(&vertical, &[0.0, 0.0, 1f64.exp()]);

    // Unit-speed semicircle through (0, 0, 1): x1 = tanh s, x3 = sech s.
    let exact = [1f64.tanh(), 0.0, 1.0 / 1f64.cosh()];
    let err = |step: f64| {
        let path = integrate_geodesic(&h, &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &linspace(0.0, 1.0, 2), &IntegratorOptions::rk4(step))
            .unwrap();
        dist(&path[1].point(), &exact)
    };
    let (e1, e2) = (err(0.1), err(0.05));
    let ratio = e1 / e2;
    outcome(
        vertical_err < 1e-8 && (12.0..=20.0).contains(&ratio),
        format!("vertical error {vertical_err:.2e}; RK4 errors {e1:.2e} → {e2:.2e}, ratio {ratio:.2}"),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("germ reproduction", germ_reproduction),
        ("classifier fixtures", classifier_fixtures),
        ("degenerate frame constants", degenerate_frame_constants),
        ("type shift law", shift_law),
        ("torsion invariance", torsion_invariance),
        ("singular locus", singular_locus_check),
        ("frontal limit", frontal_limit),
        ("cross-classifier agreement", cross_classifier),
        ("genericity", genericity),
        ("geodesic accuracy", geodesic_accuracy),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name:<28} {} [{}]",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            secs(start.elapsed())
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}

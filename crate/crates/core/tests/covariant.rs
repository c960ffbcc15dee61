mod common;

use common::{dist, exprs, norm, owned_exprs, poly_source, random_vec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tansurf::classify::{classify_point, classify_via_frames, ClassifyOptions};
use tansurf::connection::{curve_jets, hyperbolic_halfspace, sphere_stereographic, AlongCurve, ChristoffelField};
use tansurf::curve::{curve_nabla_type, DirectedCurve, Frame};
use tansurf::symbolics::jet::values;

/// `Γ(a, b)` for a conformally flat metric `e^{2φ}|dx|²` given `∇φ`.
fn conformal_contract(dphi: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    (0..a.len()).map(|k| a[k] * dot(dphi, b) + b[k] * dot(dphi, a) - dot(a, b) * dphi[k]).collect()
}

#[test]
fn hyperbolic_derivative_matches_closed_form() {
    let g = hyperbolic_halfspace(3);
    let curve = exprs(&["sin(t)", "t^2", "2 + cos(t)"]);
    let field = exprs(&["t", "1", "t^3 - t"]);
    for i in 0..10 {
        let t0 = -1.0 + 0.2 * i as f64;
        let pos = curve_jets(&curve, t0, 3).unwrap();
        let w = curve_jets(&field, t0, 2).unwrap();
        let got = values(&AlongCurve::new(&g, &pos).unwrap().derive(&w).unwrap());

        let x = [t0.sin(), t0 * t0, 2.0 + t0.cos()];
        let v = [t0.cos(), 2.0 * t0, -t0.sin()];
        let wv = [t0, 1.0, t0.powi(3) - t0];
        let dw = [1.0, 0.0, 3.0 * t0 * t0 - 1.0];
        let corr = conformal_contract(&[0.0, 0.0, -1.0 / x[2]], &v, &wv);
        let want: Vec<f64> = dw.iter().zip(&corr).map(|(a, b)| a + b).collect();
        assert!(dist(&got, &want) < 1e-13 * (1.0 + norm(&want)), "t0 = {t0}: {got:?} vs {want:?}");
    }
}

#[test]
fn sphere_derivative_matches_closed_form() {
    let g = sphere_stereographic(3);
    let curve = exprs(&["t", "0.5*t^2", "0.3 - t"]);
    let field = exprs(&["cos(t)", "t", "1"]);
    for &t0 in &[-0.7, 0.0, 0.4, 1.1] {
        let pos = curve_jets(&curve, t0, 3).unwrap();
        let w = curve_jets(&field, t0, 2).unwrap();
        let got = values(&AlongCurve::new(&g, &pos).unwrap().derive(&w).unwrap());
        let x = [t0, 0.5 * t0 * t0, 0.3 - t0];
        let r2: f64 = x.iter().map(|a| a * a).sum();
        let dphi: Vec<f64> = x.iter().map(|a| -2.0 * a / (1.0 + r2)).collect();
        let corr = conformal_contract(&dphi, &[1.0, t0, -1.0], &[t0.cos(), t0, 1.0]);
        let want = [-t0.sin() + corr[0], 1.0 + corr[1], corr[2]];
        assert!(dist(&got, &want) < 1e-13 * (1.0 + norm(&want)), "t0 = {t0}");
    }
}

#[test]
fn frame_rescaling_keeps_classification() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = ClassifyOptions::default();
    for (gamma, g) in [(ChristoffelField::flat(3), 0), (hyperbolic_halfspace(3), 1)] {
        for _ in 0..10 {
            let u_coeffs: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, 4, 1.0)).collect();
            let u: Vec<String> = u_coeffs.iter().map(|c| poly_source(c, 0.0)).collect();
            let t_star: f64 = rng.random_range(-0.5..0.5);
            let c = format!("2*(t - ({t_star:?}))");
            let gamma_src = integrate_cu(&u_coeffs, t_star, g == 1, &mut rng);
            let base = DirectedCurve::new(
                owned_exprs(&gamma_src),
                Frame::Explicit { u: owned_exprs(&u), c: Some(exprs(&[&c])[0].clone()) },
                (-1.0, 1.0),
            );
            let lam = "(1 + 0.3*t^2)";
            let scaled_u: Vec<String> = u.iter().map(|s| format!("{lam}*({s})")).collect();
            let scaled = DirectedCurve::new(
                owned_exprs(&gamma_src),
                Frame::Explicit { u: owned_exprs(&scaled_u), c: Some(exprs(&[&format!("({c})/{lam}")])[0].clone()) },
                (-1.0, 1.0),
            );
            scaled.validate().unwrap();
            for t0 in [t_star, t_star + 0.3] {
                let a = classify_via_frames(&gamma, &base, t0, &opts).unwrap();
                let b = classify_via_frames(&gamma, &scaled, t0, &opts).unwrap();
                assert_eq!(a.class, b.class, "t0 = {t0}");
                assert_eq!(a.class, classify_point(&gamma, &base, t0, &opts).unwrap().class);
            }
        }
    }
}

/// Sources of `γ = x0 + ∫_0^t 2(τ − t*) u(τ) dτ` for polynomial `u`.
fn integrate_cu(u: &[Vec<f64>], t_star: f64, lift: bool, rng: &mut ChaCha8Rng) -> Vec<String> {
    u.iter()
        .enumerate()
        .map(|(i, coeffs)| {
            let mut prod = vec![0.0; coeffs.len() + 1];
            for (k, a) in coeffs.iter().enumerate() {
                prod[k + 1] += 2.0 * a;
                prod[k] -= 2.0 * t_star * a;
            }
            let mut anti = vec![if lift && i == 2 { 3.0 } else { rng.random_range(-1.0..1.0) }];
            anti.extend(prod.iter().enumerate().map(|(k, p)| p / (k + 1) as f64));
            poly_source(&anti, 0.0)
        })
        .collect()
}

#[test]
fn affine_images_keep_types() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let flat = ChristoffelField::flat(3);
    let opts = ClassifyOptions::default();
    let models: [&[&str]; 4] = [&["t", "t^2", "t^3"], &["t", "t^2", "t^4"], &["t^2", "t^3", "t^4"], &["t", "t^2", "t^4 - t^3"]];
    for src in models {
        let a = random_vec(&mut rng, 9, 1.0);
        let b = random_vec(&mut rng, 3, 2.0);
        let image: Vec<String> = (0..3)
            .map(|r| {
                format!("({:?}) + ({:?})*({}) + ({:?})*({}) + ({:?})*({})", b[r], a[3 * r], src[0], a[3 * r + 1], src[1], a[3 * r + 2], src[2])
            })
            .collect();
        let original = DirectedCurve::new(exprs(src), Frame::Velocity, (-1.0, 1.0));
        let moved = DirectedCurve::new(owned_exprs(&image), Frame::Velocity, (-1.0, 1.0));
        for t0 in [0.0, 0.25, -0.6] {
            let x = classify_point(&flat, &original, t0, &opts).unwrap();
            let y = classify_point(&flat, &moved, t0, &opts).unwrap();
            assert_eq!(x.class, y.class, "{src:?} at {t0}");
            let tx = curve_nabla_type(&flat, &original.gamma, t0, 8, 1e-9).unwrap();
            let ty = curve_nabla_type(&flat, &moved.gamma, t0, 8, 1e-9).unwrap();
            assert_eq!(tx.entries, ty.entries, "{src:?} at {t0}");
        }
    }
}

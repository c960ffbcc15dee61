#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tansurf::symbolics::{curve_variables, parse_expr, Expr};

pub fn exprs(src: &[&str]) -> Vec<Expr> {
    src.iter().map(|s| parse_expr(s, curve_variables()).unwrap()).collect()
}

pub fn owned_exprs(src: &[String]) -> Vec<Expr> {
    src.iter().map(|s| parse_expr(s, curve_variables()).unwrap()).collect()
}

/// `Σ c_k (t − t0)^k` as expression source.
pub fn poly_source(coeffs: &[f64], t0: f64) -> String {
    let mut s = String::from("0");
    for (k, c) in coeffs.iter().enumerate() {
        s.push_str(&format!(" + ({c:?})*(t - ({t0:?}))^{k}"));
    }
    s
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| amp * rng.random_range(-1.0..1.0)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

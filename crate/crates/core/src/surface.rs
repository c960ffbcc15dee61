//! The ∇-tangent surface `f(t, s) = φ(γ(t), u(t), s)` on a rectangular grid, its
//! singular locus, and the frontal frame `(V1, V2) = (∂f/∂s, F)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::ABS_FLOOR;
use crate::connection::{AlongCurve, ChristoffelField};
use crate::curve::DirectedCurve;
use crate::error::{Error, Result};
use crate::geodesic::{geodesic_jet, IntegratorOptions, S_SWITCH};
use crate::symbolics::jet::values;
use crate::symbolics::Jet;

/// `n` samples from `lo` to `hi`; a range symmetric about 0 with odd `n` hits 0 exactly.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|j| {
                let f = j as f64 / (n - 1) as f64;
                lo * (1.0 - f) + hi * f
            })
            .collect(),
    }
}

/// Singular values `(σ_min, σ_max)` of the `m × 2` matrix with columns `a`, `b`.
pub fn jacobian_singular_values(a: &[f64], b: &[f64]) -> (f64, f64) {
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let wedge = wedge_norm(a, b);
    let big = 0.5 * (aa + bb + ((aa - bb).powi(2) + 4.0 * ab * ab).sqrt());
    let smax = big.sqrt();
    let smin = if smax > 0.0 { wedge / smax } else { 0.0 };
    (smin, smax)
}

/// Components `a_i b_j − a_j b_i` for `i < j`.
pub fn wedge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            out.push(a[i] * b[j] - a[j] * b[i]);
        }
    }
    out
}

fn wedge_norm(a: &[f64], b: &[f64]) -> f64 {
    wedge(a, b).iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub point: Vec<f64>,
    pub df_dt: Vec<f64>,
    pub df_ds: Vec<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// One fixed-`t` column of the grid; `points` is empty when integration failed.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceColumn {
    pub t: f64,
    pub points: Vec<SurfacePoint>,
    pub error: Option<String>,
}

impl SurfaceColumn {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TangentSurfaceGrid {
    pub dim: usize,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub columns: Vec<SurfaceColumn>,
}

impl TangentSurfaceGrid {
    /// `P[i][j]` at `(t_i, s_j)`, if column `i` succeeded.
    pub fn point(&self, i: usize, j: usize) -> Option<&SurfacePoint> {
        self.columns[i].points.get(j)
    }

    pub fn failed_columns(&self) -> Vec<usize> {
        self.columns.iter().enumerate().filter(|(_, c)| c.failed()).map(|(i, _)| i).collect()
    }

    /// Builds a grid from an explicit map `(t, s) ↦ (f, ∂f/∂t, ∂f/∂s)`.
    pub fn from_fn<F>(dim: usize, t: Vec<f64>, s: Vec<f64>, f: F) -> TangentSurfaceGrid
    where
        F: Fn(f64, f64) -> (Vec<f64>, Vec<f64>, Vec<f64>),
    {
        let columns = t
            .iter()
            .map(|&ti| SurfaceColumn {
                t: ti,
                points: s
                    .iter()
                    .map(|&sj| {
                        let (point, df_dt, df_ds) = f(ti, sj);
                        surface_point(point, df_dt, df_ds)
                    })
                    .collect(),
                error: None,
            })
            .collect();
        TangentSurfaceGrid { dim, t, s, columns }
    }
}

fn surface_point(point: Vec<f64>, df_dt: Vec<f64>, df_ds: Vec<f64>) -> SurfacePoint {
    let (sigma_min, sigma_max) = jacobian_singular_values(&df_dt, &df_ds);
    SurfacePoint { point, df_dt, df_ds, sigma_min, sigma_max }
}

fn column(
    gamma: &ChristoffelField,
    curve: &DirectedCurve,
    t: f64,
    s: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<SurfacePoint>> {
    let fj = curve.frame_jets(t, 1)?;
    let position: Vec<Jet> = fj.position.iter().map(|j| j.truncate(1)).collect();
    let states = geodesic_jet(gamma, &position, &fj.frame, s, opts)?;
    Ok(states
        .into_iter()
        .map(|st| {
            surface_point(
                st.point(),
                st.position.iter().map(|j| j.coeff(1)).collect(),
                st.speed(),
            )
        })
        .collect())
}

/// Samples `f` on `n_t × n_s` nodes. Each column is one jet-valued geodesic
/// integration; columns run in parallel and failures are recorded per column.
pub fn eval_surface(
    gamma: &ChristoffelField,
    curve: &DirectedCurve,
    t_range: (f64, f64),
    s_range: (f64, f64),
    n_t: usize,
    n_s: usize,
    opts: &IntegratorOptions,
) -> Result<TangentSurfaceGrid> {
    if curve.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "curve has {} components, connection dimension is {}",
            curve.dim(),
            gamma.dim()
        )));
    }
    opts.validate()?;
    let t = linspace(t_range.0, t_range.1, n_t);
    let s = linspace(s_range.0, s_range.1, n_s);
    let columns = t
        .par_iter()
        .map(|&ti| match column(gamma, curve, ti, &s, opts) {
            Ok(points) => SurfaceColumn { t: ti, points, error: None },
            Err(e) => SurfaceColumn { t: ti, points: Vec::new(), error: Some(e.to_string()) },
        })
        .collect();
    Ok(TangentSurfaceGrid { dim: gamma.dim(), t, s, columns })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusPoint {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularLocus {
    pub points: Vec<LocusPoint>,
    pub max_abs_s: f64,
}

/// Grid nodes where `σ_min < rel_tol · σ_max`.
pub fn singular_locus(grid: &TangentSurfaceGrid, rel_tol: f64) -> SingularLocus {
    let mut points = Vec::new();
    for (i, col) in grid.columns.iter().enumerate() {
        for (j, p) in col.points.iter().enumerate() {
            if p.sigma_max < ABS_FLOOR || p.sigma_min < rel_tol * p.sigma_max {
                points.push(LocusPoint { i, j, t: col.t, s: grid.s[j] });
            }
        }
    }
    let max_abs_s = points.iter().map(|p| p.s.abs()).fold(0.0, f64::max);
    SingularLocus { points, max_abs_s }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontalFrame {
    pub t: f64,
    pub s: f64,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// Coefficients of `η = ∂/∂t − c(t) ∂/∂s`.
    pub eta: (f64, f64),
    pub df_dt: Vec<f64>,
}

/// `V1 = ∂f/∂s` and `V2 = F = (1/s)(∂f/∂t − c ∂f/∂s)`; at `s = 0`, `F = ∇u`.
pub fn frontal_frame(
    gamma: &ChristoffelField,
    curve: &DirectedCurve,
    t: f64,
    s: f64,
    opts: &IntegratorOptions,
) -> Result<FrontalFrame> {
    if s != 0.0 && s.abs() < S_SWITCH {
        return Err(Error::NearSingularQuotient(s.abs()));
    }
    let fj = curve.frame_jets(t, 1)?;
    let c = fj.factor.value();
    if s == 0.0 {
        let along = AlongCurve::new(gamma, &fj.position)?;
        let du = along.derive(&fj.frame)?;
        let u = values(&fj.frame);
        let df_dt = u.iter().map(|x| c * x).collect();
        return Ok(FrontalFrame { t, s, v1: u, v2: values(&du), eta: (1.0, -c), df_dt });
    }
    let position: Vec<Jet> = fj.position.iter().map(|j| j.truncate(1)).collect();
    let st = geodesic_jet(gamma, &position, &fj.frame, &[s], opts)?.remove(0);
    let df_dt: Vec<f64> = st.position.iter().map(|j| j.coeff(1)).collect();
    let v1 = st.speed();
    let v2 = df_dt.iter().zip(&v1).map(|(a, b)| (a - c * b) / s).collect();
    Ok(FrontalFrame { t, s, v1, v2, eta: (1.0, -c), df_dt })
}

/// `u, ∇u, …, ∇^{n−1}u` at `t0` along the curve.
pub fn frame_derivatives(
    gamma: &ChristoffelField,
    curve: &DirectedCurve,
    t0: f64,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    let fj = curve.frame_jets(t0, n.saturating_sub(1))?;
    let along = AlongCurve::new(gamma, &fj.position)?;
    let out = along.iterated_values(&fj.frame, n)?;
    if out.len() < n {
        return Err(Error::OrderExhausted(format!("only {} frame derivatives available", out.len())));
    }
    Ok(out)
}

/// `E2 = (∇_η F)(t0, 0) = ∇²u(t0)` and `E3 = ∇(∇_η F)(t0) = ∇³u(t0)`.
pub fn eta_derivatives(
    gamma: &ChristoffelField,
    curve: &DirectedCurve,
    t0: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut d = frame_derivatives(gamma, curve, t0, 4)?;
    let e3 = d.pop().expect("four entries");
    let e2 = d.pop().expect("three entries");
    Ok((e2, e3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::hyperbolic_halfspace;

    fn swallowtail_curve() -> DirectedCurve {
        DirectedCurve::from_sources(&["t^2", "t^3", "t^4"], Some((&["1", "1.5*t", "2*t^2"], Some("2*t"))), (-1.0, 1.0))
            .unwrap()
    }

    #[test]
    fn linspace_hits_zero() {
        let s = linspace(-1.0, 1.0, 101);
        assert_eq!(s[50], 0.0);
        assert_eq!(s[0], -1.0);
        assert_eq!(s[100], 1.0);
    }

    #[test]
    fn singular_values_of_two_columns() {
        let (lo, hi) = jacobian_singular_values(&[3.0, 0.0, 0.0], &[0.0, 2.0, 0.0]);
        assert!((lo - 2.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
        let (lo, hi) = jacobian_singular_values(&[1.0, 1.0, 0.0], &[2.0, 2.0, 0.0]);
        assert_eq!(lo, 0.0);
        assert!((hi - 10f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn flat_cuspidal_edge_grid() {
        let flat = ChristoffelField::flat(3);
        let curve = DirectedCurve::from_sources(&["t", "t^2", "t^3"], None, (-1.0, 1.0)).unwrap();
        let g = eval_surface(&flat, &curve, (-1.0, 1.0), (-1.0, 1.0), 5, 5, &IntegratorOptions::default()).unwrap();
        for (i, &t) in g.t.iter().enumerate() {
            for (j, &s) in g.s.iter().enumerate() {
                let p = &g.point(i, j).unwrap().point;
                let want = [t + s, t * t + 2.0 * s * t, t.powi(3) + 3.0 * s * t * t];
                for k in 0..3 {
                    assert!((p[k] - want[k]).abs() < 1e-13);
                }
            }
        }
        let locus = singular_locus(&g, 1e-6);
        assert!(locus.points.iter().all(|p| p.s == 0.0));
        assert_eq!(locus.points.len(), 5);
    }

    #[test]
    fn plane_has_empty_locus() {
        let g = TangentSurfaceGrid::from_fn(3, linspace(0.0, 1.0, 4), linspace(0.0, 1.0, 4), |t, s| {
            (vec![t, s, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0])
        });
        assert!(singular_locus(&g, 1e-6).points.is_empty());
    }

    #[test]
    fn flat_swallowtail_frontal_frame() {
        let flat = ChristoffelField::flat(3);
        let curve = swallowtail_curve();
        for s in [0.0, 0.3, -0.7] {
            let ff = frontal_frame(&flat, &curve, 0.4, s, &IntegratorOptions::default()).unwrap();
            let want = [0.0, 1.5, 1.6];
            for k in 0..3 {
                assert!((ff.v2[k] - want[k]).abs() < 1e-12, "{s} {:?}", ff.v2);
            }
        }
        assert!(matches!(
            frontal_frame(&flat, &curve, 0.4, 1e-6, &IntegratorOptions::default()),
            Err(Error::NearSingularQuotient(_))
        ));
        let (e2, e3) = eta_derivatives(&flat, &curve, 0.0).unwrap();
        assert_eq!(e2, vec![0.0, 0.0, 4.0]);
        assert_eq!(e3, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn curved_initial_row() {
        let g = hyperbolic_halfspace(3);
        let curve = DirectedCurve::from_sources(&["t", "0.3*t^2", "1 + 0.2*t"], None, (-0.5, 0.5)).unwrap();
        let grid = eval_surface(&g, &curve, (-0.5, 0.5), (-0.2, 0.2), 3, 5, &IntegratorOptions::default()).unwrap();
        for (i, &t) in grid.t.iter().enumerate() {
            let p = grid.point(i, 2).unwrap();
            let want = curve.point(t).unwrap();
            for k in 0..3 {
                assert!((p.point[k] - want[k]).abs() < 1e-10);
            }
            assert!(p.sigma_min < 1e-12 * p.sigma_max.max(1.0));
        }
    }
}

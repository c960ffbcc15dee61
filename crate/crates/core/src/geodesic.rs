//! Geodesic integration `x' = v, v'^λ = −Γ^λ_{μν}(x) v^μ v^ν`.
//!
//! The state is carried as jets in the curve parameter `t`, so a single
//! integration of `φ(γ(t), u(t), s)` yields `f`, `∂f/∂t` (coefficient 1) and
//! `∂f/∂s` (the velocity state) without differencing. Plain real initial data
//! are order-0 jets.

use serde::{Deserialize, Serialize};

use crate::connection::ChristoffelField;
use crate::error::{Error, Result};
use crate::symbolics::jet::min_order;
use crate::symbolics::{Jet, JetVector};

/// Below this `|s|` the remainder `h` and the frontal frame use their limit forms.
pub const S_SWITCH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4 { step: f64 },
    /// Adaptive Dormand–Prince 5(4) pair.
    Dopri45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub method: Method,
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
    /// Largest allowed state magnitude before reporting [`Error::BlowUp`].
    pub blowup_norm: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            method: Method::Dopri45,
            atol: 1e-10,
            rtol: 1e-10,
            max_steps: 100_000,
            initial_step: 1e-2,
            blowup_norm: 1e8,
        }
    }
}

impl IntegratorOptions {
    pub fn rk4(step: f64) -> Self {
        IntegratorOptions { method: Method::Rk4 { step }, ..Default::default() }
    }

    pub fn with_tolerance(tol: f64) -> Self {
        IntegratorOptions { atol: tol, rtol: tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Validation(format!("integrator: {what}")));
        if !(self.atol > 0.0 && self.rtol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_steps < 1 {
            return bad("max_steps must be at least 1");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step must be positive");
        }
        if !(self.blowup_norm > 0.0) {
            return bad("blowup_norm must be positive");
        }
        if let Method::Rk4 { step } = self.method {
            if !(step > 0.0) {
                return bad("rk4 step must be positive");
            }
        }
        Ok(())
    }
}

/// A point on a geodesic: position and velocity (as jets in `t`) at parameter `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub s: f64,
    pub position: JetVector,
    pub velocity: JetVector,
}

impl GeodesicState {
    pub fn point(&self) -> Vec<f64> {
        self.position.iter().map(Jet::value).collect()
    }

    pub fn speed(&self) -> Vec<f64> {
        self.velocity.iter().map(Jet::value).collect()
    }
}

type State = Vec<Jet>;

struct System<'a> {
    gamma: &'a ChristoffelField,
    dim: usize,
    order: usize,
    /// Positions in the state are displacements from this point when set.
    origin: Option<Vec<f64>>,
}

impl System<'_> {
    fn rhs(&self, y: &State) -> Result<State> {
        let (x, v) = y.split_at(self.dim);
        let position: Vec<Jet> = match &self.origin {
            None => x.to_vec(),
            Some(o) => x
                .iter()
                .zip(o)
                .map(|(xi, oi)| xi.add(&Jet::constant(*oi, xi.order(), xi.base())))
                .collect(),
        };
        let accel = self.gamma.along(&position, self.order)?.contract(v, v);
        let mut out = Vec::with_capacity(2 * self.dim);
        out.extend(v.iter().cloned());
        out.extend(accel.into_iter().map(|a| a.neg()));
        Ok(out)
    }
}

fn axpy(y: &State, terms: &[(f64, &State)]) -> State {
    let mut out = y.clone();
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for (o, kj) in out.iter_mut().zip(k.iter()) {
            o.add_scaled(*c, kj);
        }
    }
    out
}

fn max_abs(y: &State) -> f64 {
    y.iter().flat_map(|j| j.coeffs().iter()).fold(0.0f64, |m, c| m.max(c.abs()))
}

fn all_finite(y: &State) -> bool {
    y.iter().all(|j| j.coeffs().iter().all(|c| c.is_finite()))
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper<'a> {
    system: System<'a>,
    opts: IntegratorOptions,
    steps: usize,
}

impl Stepper<'_> {
    fn rk4_step(&self, y: &State, h: f64) -> Result<State> {
        let k1 = self.system.rhs(y)?;
        let k2 = self.system.rhs(&axpy(y, &[(h / 2.0, &k1)]))?;
        let k3 = self.system.rhs(&axpy(y, &[(h / 2.0, &k2)]))?;
        let k4 = self.system.rhs(&axpy(y, &[(h, &k3)]))?;
        Ok(axpy(y, &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)]))
    }

    /// One Dormand–Prince attempt: returns the 5th-order solution and the scaled error.
    fn dopri_step(&self, y: &State, h: f64) -> Result<(State, f64)> {
        let mut k: Vec<State> = Vec::with_capacity(7);
        k.push(self.system.rhs(y)?);
        for i in 1..7 {
            let terms: Vec<(f64, &State)> = (0..i).map(|j| (h * A[i][j], &k[j])).collect();
            k.push(self.system.rhs(&axpy(y, &terms))?);
        }
        let y5 = axpy(y, &(0..7).map(|j| (h * B5[j], &k[j])).collect::<Vec<_>>());
        let diff: Vec<(f64, &State)> = (0..7).map(|j| (h * (B5[j] - B4[j]), &k[j])).collect();
        let zero: State = y.iter().map(|j| Jet::zero(j.order(), j.base())).collect();
        let e = axpy(&zero, &diff);
        let mut err = 0.0f64;
        for ((ej, yj), zj) in e.iter().zip(y).zip(&y5) {
            for ((ec, yc), zc) in ej.coeffs().iter().zip(yj.coeffs()).zip(zj.coeffs()) {
                let scale = self.opts.atol + self.opts.rtol * yc.abs().max(zc.abs());
                err = err.max(ec.abs() / scale);
            }
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        Ok((y5, err))
    }

    fn check_state(&self, y: &State, s: f64, path: &[GeodesicState]) -> Result<()> {
        if !all_finite(y) || max_abs(y) > self.opts.blowup_norm {
            return Err(Error::BlowUp { s, partial: Box::new(path.to_vec()) });
        }
        Ok(())
    }

    fn bump(&mut self, s: f64) -> Result<()> {
        self.steps += 1;
        if self.steps > self.opts.max_steps {
            return Err(Error::StepLimitExceeded { max_steps: self.opts.max_steps, s });
        }
        Ok(())
    }

    /// Integrates from `(0, y0)` through `targets`, which are sorted away from 0.
    fn run(&mut self, y0: &State, targets: &[f64], path: &mut Vec<GeodesicState>) -> Result<()> {
        let dim = self.system.dim;
        let mut y = y0.clone();
        let mut s = 0.0f64;
        let mut h = self.opts.initial_step;
        for &target in targets {
            let dir = if target >= 0.0 { 1.0 } else { -1.0 };
            match self.opts.method {
                Method::Rk4 { step } => {
                    let span = target - s;
                    let n = ((span.abs() / step) - 1e-9).ceil().max(1.0) as usize;
                    let hh = span / n as f64;
                    for i in 0..n {
                        self.bump(s)?;
                        y = self.rk4_step(&y, hh)?;
                        s = if i + 1 == n { target } else { s + hh };
                        self.check_state(&y, s, path)?;
                    }
                }
                Method::Dopri45 => {
                    while (target - s) * dir > 0.0 {
                        self.bump(s)?;
                        let remaining = (target - s).abs();
                        let last = h >= remaining * (1.0 - 1e-12);
                        let step = if last { remaining } else { h };
                        let attempt = self.dopri_step(&y, dir * step);
                        let (y_new, err) = match attempt {
                            Ok(r) => r,
                            // A trial stage left the chart; retry with a smaller step.
                            Err(Error::Domain(_)) if step > 1e-12 => (y.clone(), f64::INFINITY),
                            Err(e) => return Err(e),
                        };
                        if err <= 1.0 {
                            y = y_new;
                            s = if last { target } else { s + dir * step };
                            self.check_state(&y, s, path)?;
                        }
                        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                        h = step * factor;
                        if h < 1e-14 * (1.0 + s.abs()) {
                            return Err(Error::StepLimitExceeded { max_steps: self.steps, s });
                        }
                    }
                }
            }
            let (x, v) = y.split_at(dim);
            path.push(GeodesicState { s: target, position: x.to_vec(), velocity: v.to_vec() });
        }
        Ok(())
    }
}

fn integrate(
    gamma: &ChristoffelField,
    position: &[Jet],
    velocity: &[Jet],
    s_values: &[f64],
    opts: &IntegratorOptions,
    origin: Option<Vec<f64>>,
) -> Result<Vec<GeodesicState>> {
    opts.validate()?;
    let dim = gamma.dim();
    if position.len() != dim || velocity.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "geodesic state of size ({}, {}) for connection of dimension {dim}",
            position.len(),
            velocity.len()
        )));
    }
    let order = min_order(position).min(min_order(velocity));
    let y0: State = position
        .iter()
        .chain(velocity)
        .map(|j| j.truncate(order))
        .collect();
    let system = System { gamma, dim, order, origin };

    let mut forward: Vec<f64> = s_values.iter().copied().filter(|s| *s > 0.0).collect();
    let mut backward: Vec<f64> = s_values.iter().copied().filter(|s| *s < 0.0).collect();
    forward.sort_by(f64::total_cmp);
    forward.dedup();
    backward.sort_by(|a, b| b.total_cmp(a));
    backward.dedup();

    let mut stepper = Stepper { system, opts: *opts, steps: 0 };
    let mut fwd_path = Vec::new();
    stepper.run(&y0, &forward, &mut fwd_path)?;
    stepper.steps = 0;
    let mut bwd_path = Vec::new();
    stepper.run(&y0, &backward, &mut bwd_path)?;

    let (x0, v0) = y0.split_at(dim);
    s_values
        .iter()
        .map(|&s| {
            if s == 0.0 {
                return Ok(GeodesicState { s, position: x0.to_vec(), velocity: v0.to_vec() });
            }
            let pool = if s > 0.0 { &fwd_path } else { &bwd_path };
            pool.iter()
                .find(|st| st.s == s)
                .cloned()
                .ok_or_else(|| Error::Domain(format!("non-finite parameter s = {s}")))
        })
        .collect()
}

/// Geodesic through `x` with velocity `v`, sampled at `s_values` (any order, any
/// sign). At `s = 0` the state is returned exactly.
pub fn integrate_geodesic(
    gamma: &ChristoffelField,
    x: &[f64],
    v: &[f64],
    s_values: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<GeodesicState>> {
    let lift = |a: &[f64]| a.iter().map(|c| Jet::constant(*c, 0, 0.0)).collect::<Vec<_>>();
    integrate(gamma, &lift(x), &lift(v), s_values, opts, None)
}

/// `φ(x, v, s)` and `∂φ/∂s(x, v, s)`.
pub fn geodesic_point(
    gamma: &ChristoffelField,
    x: &[f64],
    v: &[f64],
    s: f64,
    opts: &IntegratorOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let st = integrate_geodesic(gamma, x, v, &[s], opts)?.remove(0);
    Ok((st.point(), st.speed()))
}

/// Geodesics with jet-valued initial data (jets in the curve parameter).
pub fn geodesic_jet(
    gamma: &ChristoffelField,
    position: &[Jet],
    velocity: &[Jet],
    s_values: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<GeodesicState>> {
    integrate(gamma, position, velocity, s_values, opts, None)
}

/// Taylor series of `s ↦ φ(x, v, s)` at `s = 0` up to `order`, one jet (in `s`) per
/// coordinate.
pub fn geodesic_series(
    gamma: &ChristoffelField,
    x: &[f64],
    v: &[f64],
    order: usize,
) -> Result<JetVector> {
    let dim = gamma.dim();
    let mut coeffs: Vec<Vec<f64>> = (0..dim).map(|i| vec![x[i], v[i]]).collect();
    // x_{n+2} = a_n / ((n+1)(n+2)) with a = −Γ(x)(x', x') known through order n.
    for n in 0..order.saturating_sub(1) {
        let pos: Vec<Jet> = coeffs.iter().map(|c| Jet::new(0.0, c[..=n].to_vec())).collect();
        let vel: Vec<Jet> = coeffs
            .iter()
            .map(|c| Jet::new(0.0, (0..=n).map(|j| (j + 1) as f64 * c[j + 1]).collect()))
            .collect();
        let accel = gamma.along(&pos, n)?.contract(&vel, &vel);
        for i in 0..dim {
            let a_n = -accel[i].coeff(n);
            coeffs[i].push(a_n / ((n + 1) * (n + 2)) as f64);
        }
    }
    Ok(coeffs
        .into_iter()
        .map(|mut c| {
            c.truncate(order + 1);
            c.resize(order + 1, 0.0);
            Jet::new(0.0, c)
        })
        .collect())
}

/// `h(x, v, s)` in `φ(x, v, s) = x + s v + ½ s² h(x, v, s)`.
///
/// For `|s| > S_SWITCH` this is the quotient `2(φ − x − s v)/s²`, integrated in
/// displacement form; closer to 0 it is the limit `−Γ(x)(v, v)` plus the linear
/// correction from the geodesic's third derivative.
pub fn geodesic_remainder(
    gamma: &ChristoffelField,
    x: &[f64],
    v: &[f64],
    s: f64,
    opts: &IntegratorOptions,
) -> Result<Vec<f64>> {
    if s.abs() <= S_SWITCH {
        let series = geodesic_series(gamma, x, v, 3)?;
        return Ok(series.iter().map(|j| 2.0 * j.coeff(2) + 2.0 * j.coeff(3) * s).collect());
    }
    let zero: Vec<Jet> = x.iter().map(|_| Jet::constant(0.0, 0, 0.0)).collect();
    let vel: Vec<Jet> = v.iter().map(|c| Jet::constant(*c, 0, 0.0)).collect();
    let st = integrate(gamma, &zero, &vel, &[s], opts, Some(x.to_vec()))?.remove(0);
    Ok(st
        .position
        .iter()
        .zip(v)
        .map(|(y, vi)| 2.0 * (y.value() - s * vi) / (s * s))
        .collect())
}

//! Model germs of tangent-surface singularities and the flat model curves whose
//! tangent surfaces reproduce them.
//!
//! Only the tangent-surface-shaped representatives are implemented. Diffeomorphic
//! alternates such as the cuspidal edge `(u, w) ↦ (u, w², w³)` are not.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::SingularityClass;
use crate::curve::{DirectedCurve, Frame};
use crate::error::{Error, Result};
use crate::symbolics::{curve_variables, parse_expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GermKind {
    CuspidalEdge(usize),
    FoldedUmbrella,
    Swallowtail,
    OpenSwallowtail(usize),
    WhitneyCusp,
}

impl GermKind {
    pub fn dim(self) -> usize {
        match self {
            GermKind::CuspidalEdge(m) | GermKind::OpenSwallowtail(m) => m,
            GermKind::FoldedUmbrella | GermKind::Swallowtail => 3,
            GermKind::WhitneyCusp => 2,
        }
    }

    pub fn validate(self) -> Result<()> {
        let ok = match self {
            GermKind::CuspidalEdge(m) => m >= 3,
            GermKind::OpenSwallowtail(m) => m >= 4,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("{self} is not defined in dimension {}", self.dim())))
        }
    }

    /// The class the classifier should report for this germ, if any.
    pub fn class(self) -> Option<SingularityClass> {
        match self {
            GermKind::CuspidalEdge(_) => Some(SingularityClass::CuspidalEdge),
            GermKind::FoldedUmbrella => Some(SingularityClass::FoldedUmbrella),
            GermKind::Swallowtail => Some(SingularityClass::Swallowtail),
            GermKind::OpenSwallowtail(_) => Some(SingularityClass::OpenSwallowtail),
            GermKind::WhitneyCusp => None,
        }
    }
}

impl fmt::Display for GermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GermKind::CuspidalEdge(m) => write!(f, "cuspidal-edge-{m}"),
            GermKind::FoldedUmbrella => f.write_str("folded-umbrella"),
            GermKind::Swallowtail => f.write_str("swallowtail"),
            GermKind::OpenSwallowtail(m) => write!(f, "open-swallowtail-{m}"),
            GermKind::WhitneyCusp => f.write_str("whitney-cusp"),
        }
    }
}

/// Parses `cuspidal-edge[-m]`, `folded-umbrella`, `swallowtail`,
/// `open-swallowtail[-m]` and `whitney-cusp`.
impl FromStr for GermKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<GermKind> {
        let with_dim = |rest: &str, default: usize| -> Result<usize> {
            if rest.is_empty() {
                return Ok(default);
            }
            rest.strip_prefix('-')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| Error::Validation(format!("bad dimension suffix in germ kind `{s}`")))
        };
        let kind = if let Some(rest) = s.strip_prefix("cuspidal-edge") {
            GermKind::CuspidalEdge(with_dim(rest, 3)?)
        } else if let Some(rest) = s.strip_prefix("open-swallowtail") {
            GermKind::OpenSwallowtail(with_dim(rest, 4)?)
        } else {
            match s {
                "folded-umbrella" => GermKind::FoldedUmbrella,
                "swallowtail" => GermKind::Swallowtail,
                "whitney-cusp" => GermKind::WhitneyCusp,
                _ => return Err(Error::Validation(format!("unknown germ kind `{s}`"))),
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Evaluates the model germ at `(t, s)`; for the Whitney cusp `(u, t) ↦ (u, t³ + ut)`
/// the arguments are `(t, u)`.
pub fn germ_eval(kind: GermKind, t: f64, s: f64) -> Result<Vec<f64>> {
    kind.validate()?;
    let mut out = vec![0.0; kind.dim()];
    match kind {
        GermKind::CuspidalEdge(_) => {
            out[0] = t + s;
            out[1] = t * t + 2.0 * s * t;
            out[2] = t.powi(3) + 3.0 * s * t * t;
        }
        GermKind::FoldedUmbrella => {
            out[0] = t + s;
            out[1] = t * t + 2.0 * s * t;
            out[2] = t.powi(4) + 4.0 * s * t.powi(3);
        }
        GermKind::Swallowtail | GermKind::OpenSwallowtail(_) => {
            out[0] = t * t + s;
            out[1] = t.powi(3) + 1.5 * s * t;
            out[2] = t.powi(4) + 2.0 * s * t * t;
            if let GermKind::OpenSwallowtail(_) = kind {
                out[3] = t.powi(5) + 2.5 * s * t.powi(3);
            }
        }
        GermKind::WhitneyCusp => {
            out[0] = s;
            out[1] = t.powi(3) + s * t;
        }
    }
    Ok(out)
}

/// `(∂f/∂t, ∂f/∂s)` of the model germ.
pub fn germ_jacobian(kind: GermKind, t: f64, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    kind.validate()?;
    let m = kind.dim();
    let (mut ft, mut fs) = (vec![0.0; m], vec![0.0; m]);
    match kind {
        GermKind::CuspidalEdge(_) => {
            ft[..3].copy_from_slice(&[1.0, 2.0 * t + 2.0 * s, 3.0 * t * t + 6.0 * s * t]);
            fs[..3].copy_from_slice(&[1.0, 2.0 * t, 3.0 * t * t]);
        }
        GermKind::FoldedUmbrella => {
            ft.copy_from_slice(&[1.0, 2.0 * t + 2.0 * s, 4.0 * t.powi(3) + 12.0 * s * t * t]);
            fs.copy_from_slice(&[1.0, 2.0 * t, 4.0 * t.powi(3)]);
        }
        GermKind::Swallowtail | GermKind::OpenSwallowtail(_) => {
            ft[..3].copy_from_slice(&[2.0 * t, 3.0 * t * t + 1.5 * s, 4.0 * t.powi(3) + 4.0 * s * t]);
            fs[..3].copy_from_slice(&[1.0, 1.5 * t, 2.0 * t * t]);
            if let GermKind::OpenSwallowtail(_) = kind {
                ft[3] = 5.0 * t.powi(4) + 7.5 * s * t * t;
                fs[3] = 2.5 * t.powi(3);
            }
        }
        GermKind::WhitneyCusp => {
            ft.copy_from_slice(&[0.0, 3.0 * t * t + s]);
            fs.copy_from_slice(&[1.0, t]);
        }
    }
    Ok((ft, fs))
}

/// Flat-space curve whose tangent surface is the germ: `γ + s·u` with `u = γ'` for
/// the immersed models and `u = γ' / (2t)`, `c = 2t` for the swallowtails.
pub fn model_curve(kind: GermKind) -> Result<DirectedCurve> {
    kind.validate()?;
    let pad = |mut v: Vec<&'static str>, m: usize| {
        v.resize(m, "0");
        v
    };
    let (gamma, frame): (Vec<&str>, Option<(Vec<&str>, &str)>) = match kind {
        GermKind::CuspidalEdge(m) => (pad(vec!["t", "t^2", "t^3"], m), None),
        GermKind::FoldedUmbrella => (vec!["t", "t^2", "t^4"], None),
        GermKind::Swallowtail => (vec!["t^2", "t^3", "t^4"], Some((vec!["1", "1.5*t", "2*t^2"], "2*t"))),
        GermKind::OpenSwallowtail(m) => (
            pad(vec!["t^2", "t^3", "t^4", "t^5"], m),
            Some((pad(vec!["1", "1.5*t", "2*t^2", "2.5*t^3"], m), "2*t")),
        ),
        GermKind::WhitneyCusp => {
            return Err(Error::DimensionMismatch("the Whitney cusp has no model curve in m ≥ 3".into()))
        }
    };
    let vars = curve_variables();
    let parse = |v: &[&str]| v.iter().map(|s| parse_expr(s, vars.clone())).collect::<Result<Vec<_>>>();
    let frame = match frame {
        None => Frame::Explicit { u: parse(&derivative_sources(kind))?, c: Some(parse_expr("1", vars.clone())?) },
        Some((u, c)) => Frame::Explicit { u: parse(&u)?, c: Some(parse_expr(c, vars.clone())?) },
    };
    Ok(DirectedCurve::new(parse(&gamma)?, frame, (-1.0, 1.0)).with_label(kind.to_string()))
}

fn derivative_sources(kind: GermKind) -> Vec<&'static str> {
    let mut v = match kind {
        GermKind::FoldedUmbrella => vec!["1", "2*t", "4*t^3"],
        _ => vec!["1", "2*t", "3*t^2"],
    };
    v.resize(kind.dim(), "0");
    v
}

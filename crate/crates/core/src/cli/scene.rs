//! TOML scene files.
//!
//! ```toml
//! dim = 3
//!
//! [connection]
//! preset = "hyperbolic-halfspace"
//! Gamma.1.2.3 = "x1*x2"      # Γ^1_{23}
//!
//! [curve]
//! gamma = ["t", "t^2", "1 + t^3"]
//! domain = [-1.0, 1.0]
//!
//! [grid]
//! s_range = [-0.5, 0.5]
//! n_t = 81
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue};

use crate::classify::{ClassifyOptions, DEFAULT_RANK_TOL};
use crate::connection::{preset, ChristoffelField, PRESETS};
use crate::curve::{frame_from_degenerate, DirectedCurve, Frame, DEFAULT_ATOL};
use crate::error::{Error, Result};
use crate::geodesic::{IntegratorOptions, Method};
use crate::symbolics::{coordinate_variables, curve_variables, parse_expr};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub dim: usize,
    #[serde(default)]
    pub connection: ConnectionSpec,
    pub curve: CurveSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// `Gamma.λ.μ.ν` source strings, keyed by 1-based index strings.
pub type GammaTable = BTreeMap<String, BTreeMap<String, BTreeMap<String, String>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectionSpec {
    pub preset: String,
    pub symmetrize: bool,
    /// Seed and amplitude for `random-poly`.
    pub seed: u64,
    pub amplitude: f64,
    /// Inline symbols; they replace the matching preset entries.
    #[serde(rename = "Gamma", skip_serializing_if = "BTreeMap::is_empty")]
    pub gamma: GammaTable,
}

impl Default for ConnectionSpec {
    fn default() -> Self {
        ConnectionSpec {
            preset: "flat".into(),
            symmetrize: true,
            seed: 0,
            amplitude: 0.2,
            gamma: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameAnchor {
    pub t0: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub gamma: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    /// Use `u = γ' / (k (t − t0)^{k−1})` instead of an explicit frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_anchor: Option<FrameAnchor>,
    #[serde(default = "unit_interval")]
    pub domain: (f64, f64),
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

fn unit_interval() -> (f64, f64) {
    (-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub jet_order: usize,
    pub rel_tol: f64,
    pub zero_tol: f64,
    /// Jet coefficients at or below this are zero.
    pub coeff_atol: f64,
    pub integrator: IntegratorSpec,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            jet_order: 8,
            rel_tol: DEFAULT_RANK_TOL,
            zero_tol: 1e-9,
            coeff_atol: DEFAULT_ATOL,
            integrator: IntegratorSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    /// `dopri45` or `rk4`.
    pub method: String,
    /// Fixed step for `rk4`.
    pub step: f64,
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
    pub blowup_norm: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let d = IntegratorOptions::default();
        IntegratorSpec {
            method: "dopri45".into(),
            step: 1e-2,
            atol: d.atol,
            rtol: d.rtol,
            max_steps: d.max_steps,
            initial_step: d.initial_step,
            blowup_norm: d.blowup_norm,
        }
    }
}

impl IntegratorSpec {
    pub fn options(&self) -> Result<IntegratorOptions> {
        let method = match self.method.as_str() {
            "dopri45" => Method::Dopri45,
            "rk4" => Method::Rk4 { step: self.step },
            other => {
                return Err(Error::Validation(format!(
                    "unknown integrator `{other}` (expected dopri45 or rk4)"
                )))
            }
        };
        let opts = IntegratorOptions {
            method,
            atol: self.atol,
            rtol: self.rtol,
            max_steps: self.max_steps,
            initial_step: self.initial_step,
            blowup_norm: self.blowup_norm,
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Defaults to the curve domain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_range: Option<(f64, f64)>,
    pub s_range: (f64, f64),
    pub n_t: usize,
    pub n_s: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { t_range: None, s_range: (-1.0, 1.0), n_t: 41, n_s: 41 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ProjectionRepr", into = "ProjectionRepr")]
pub enum Projection {
    /// 1-based coordinate triple.
    Coordinates([usize; 3]),
    /// Best-fit 3-plane through the vertex cloud.
    Pca,
}

impl Default for Projection {
    fn default() -> Self {
        Projection::Coordinates([1, 2, 3])
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::Coordinates([a, b, c]) => write!(f, "{a},{b},{c}"),
            Projection::Pca => f.write_str("pca"),
        }
    }
}

impl std::str::FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Projection> {
        if s == "pca" {
            return Ok(Projection::Pca);
        }
        let idx: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Validation(format!("bad projection `{s}`")))?;
        <[usize; 3]>::try_from(idx)
            .map(Projection::Coordinates)
            .map_err(|_| Error::Validation(format!("projection `{s}` needs three coordinates")))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ProjectionRepr {
    Coordinates([usize; 3]),
    Name(String),
}

impl TryFrom<ProjectionRepr> for Projection {
    type Error = String;

    fn try_from(r: ProjectionRepr) -> std::result::Result<Projection, String> {
        match r {
            ProjectionRepr::Coordinates(c) => Ok(Projection::Coordinates(c)),
            ProjectionRepr::Name(n) if n == "pca" => Ok(Projection::Pca),
            ProjectionRepr::Name(n) => Err(format!("unknown projection `{n}`")),
        }
    }
}

impl From<Projection> for ProjectionRepr {
    fn from(p: Projection) -> ProjectionRepr {
        match p {
            Projection::Coordinates(c) => ProjectionRepr::Coordinates(c),
            Projection::Pca => ProjectionRepr::Name("pca".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<String>,
    pub projection: Projection,
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Scene::from_toml_str(&src).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_scene(scene: &Scene, path: &Path) -> Result<()> {
    std::fs::write(path, scene.to_toml()?)?;
    Ok(())
}

impl Scene {
    /// Parses and validates; defaults are filled in.
    pub fn from_toml_str(src: &str) -> Result<Scene> {
        let mut scene: Scene = toml::from_str(src).map_err(|e| Error::Parse(e.to_string()))?;
        if scene.grid.t_range.is_none() {
            scene.grid.t_range = Some(scene.curve.domain);
        }
        let spans = SpanIndex::new(src);
        scene.validate().map_err(|(path, msg)| {
            let field = path.join(".");
            match spans.line(&path) {
                Some(line) => Error::Validation(format!("{field} (line {line}): {msg}")),
                None => Error::Validation(format!("{field}: {msg}")),
            }
        })?;
        Ok(scene)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Validation(format!("scene serialization: {e}")))
    }

    /// Connection as configured, symmetrized when `connection.symmetrize` is set.
    pub fn connection(&self) -> Result<ChristoffelField> {
        let spec = &self.connection;
        let mut field = preset(&spec.preset, self.dim, spec.seed, spec.amplitude)?;
        if !spec.gamma.is_empty() {
            let vars = coordinate_variables(self.dim);
            for ((l, m, n), src) in gamma_entries(&spec.gamma, self.dim).map_err(|(_, e)| Error::Validation(e))? {
                field.set(l - 1, m - 1, n - 1, parse_expr(src, vars.clone())?);
            }
            let label = if spec.preset == "flat" { "inline".to_string() } else { format!("{}+inline", field.label()) };
            field = field.with_label(label);
        }
        Ok(if spec.symmetrize { field.symmetrize() } else { field })
    }

    pub fn directed_curve(&self) -> Result<DirectedCurve> {
        let c = &self.curve;
        let vars = curve_variables();
        let parse = |v: &[String]| v.iter().map(|s| parse_expr(s, vars.clone())).collect::<Result<Vec<_>>>();
        let gamma = parse(&c.gamma)?;
        let frame = match (&c.u, &c.frame_anchor) {
            (Some(u), _) => Frame::Explicit {
                u: parse(u)?,
                c: c.c.as_deref().map(|s| parse_expr(s, vars.clone())).transpose()?,
            },
            (None, Some(a)) => Frame::Degenerate { t0: a.t0, k: a.k },
            (None, None) => Frame::Velocity,
        };
        let label = if c.label.is_empty() { c.gamma.join(", ") } else { c.label.clone() };
        Ok(DirectedCurve::new(gamma, frame, c.domain).with_label(label))
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            rel_tol: self.numerics.rel_tol,
            zero_tol: self.numerics.zero_tol,
            jet_order: self.numerics.jet_order,
        }
    }

    pub fn integrator(&self) -> Result<IntegratorOptions> {
        self.numerics.integrator.options()
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.grid.t_range.unwrap_or(self.curve.domain)
    }

    fn validate(&self) -> std::result::Result<(), (Vec<String>, String)> {
        let at = |p: &[&str], msg: String| Err((p.iter().map(|s| s.to_string()).collect(), msg));
        let m = self.dim;
        if m < 2 {
            return at(&["dim"], format!("dimension must be at least 2, got {m}"));
        }

        let conn = &self.connection;
        if !PRESETS.contains(&conn.preset.as_str()) {
            return at(
                &["connection", "preset"],
                format!("unknown preset `{}` (known: {})", conn.preset, PRESETS.join(", ")),
            );
        }
        if conn.preset == "random-poly" && !(conn.amplitude >= 0.0) {
            return at(&["connection", "amplitude"], "must be non-negative".into());
        }
        let vars = coordinate_variables(m);
        for ((l, mu, nu), src) in gamma_entries(&conn.gamma, m)? {
            if let Err(e) = parse_expr(src, vars.clone()) {
                let path = ["connection", "Gamma", &l.to_string(), &mu.to_string(), &nu.to_string()]
                    .map(String::from)
                    .to_vec();
                return Err((path, e.to_string()));
            }
        }

        let c = &self.curve;
        if c.gamma.len() != m {
            return at(&["curve", "gamma"], format!("{} components for dimension {m}", c.gamma.len()));
        }
        let tvars = curve_variables();
        let check = |field: &str, list: &[String]| -> std::result::Result<(), (Vec<String>, String)> {
            for (i, s) in list.iter().enumerate() {
                if let Err(e) = parse_expr(s, tvars.clone()) {
                    return Err((vec!["curve".into(), field.into(), i.to_string()], e.to_string()));
                }
            }
            Ok(())
        };
        check("gamma", &c.gamma)?;
        if let Some(u) = &c.u {
            if u.len() != m {
                return at(&["curve", "u"], format!("{} components for dimension {m}", u.len()));
            }
            check("u", u)?;
            if c.frame_anchor.is_some() {
                return at(&["curve", "frame_anchor"], "cannot be combined with an explicit u".into());
            }
        } else if c.c.is_some() {
            return at(&["curve", "c"], "c requires an explicit u".into());
        }
        if let Some(src) = &c.c {
            if let Err(e) = parse_expr(src, tvars.clone()) {
                return at(&["curve", "c"], e.to_string());
            }
        }
        if !(c.domain.0 < c.domain.1) {
            return at(&["curve", "domain"], format!("empty interval [{}, {}]", c.domain.0, c.domain.1));
        }
        if let Some(a) = &c.frame_anchor {
            if a.k < 1 {
                return at(&["curve", "frame_anchor", "k"], "order must be at least 1".into());
            }
            if let Err(e) = parse_gamma(c).and_then(|g| frame_from_degenerate(&g, a.t0, a.k, 1, self.numerics.coeff_atol)) {
                return at(&["curve", "frame_anchor"], e.to_string());
            }
        }
        if let Err(e) = self.directed_curve().and_then(|d| d.validate()) {
            return at(&["curve"], e.to_string());
        }

        let n = &self.numerics;
        if n.jet_order < 2 {
            return at(&["numerics", "jet_order"], format!("must be at least 2, got {}", n.jet_order));
        }
        for (name, v) in [("rel_tol", n.rel_tol), ("zero_tol", n.zero_tol), ("coeff_atol", n.coeff_atol)] {
            if !(v > 0.0) {
                return at(&["numerics", name], format!("must be positive, got {v}"));
            }
        }
        if let Err(e) = n.integrator.options() {
            return at(&["numerics", "integrator"], e.to_string());
        }

        let g = &self.grid;
        for (name, r) in [("t_range", self.t_range()), ("s_range", g.s_range)] {
            if !(r.0 < r.1) {
                return at(&["grid", name], format!("empty interval [{}, {}]", r.0, r.1));
            }
        }
        for (name, v) in [("n_t", g.n_t), ("n_s", g.n_s)] {
            if v < 2 {
                return at(&["grid", name], format!("need at least 2 nodes, got {v}"));
            }
        }

        match self.output.projection {
            Projection::Coordinates(_) if m < 3 => {}
            Projection::Coordinates(idx) => {
                if idx.iter().any(|&i| i == 0 || i > m) {
                    return at(&["output", "projection"], format!("coordinates must lie in 1..={m}"));
                }
                if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                    return at(&["output", "projection"], "coordinates must be distinct".into());
                }
            }
            Projection::Pca if m < 3 => {
                return at(&["output", "projection"], "pca needs dimension ≥ 3".into());
            }
            Projection::Pca => {}
        }
        Ok(())
    }
}

fn parse_gamma(c: &CurveSpec) -> Result<Vec<crate::symbolics::Expr>> {
    let vars = curve_variables();
    c.gamma.iter().map(|s| parse_expr(s, vars.clone())).collect()
}

type Entry<'a> = ((usize, usize, usize), &'a str);

fn gamma_entries(table: &GammaTable, m: usize) -> std::result::Result<Vec<Entry<'_>>, (Vec<String>, String)> {
    let mut out = Vec::new();
    for (l, row) in table {
        for (mu, col) in row {
            for (nu, src) in col {
                let path = vec!["connection".into(), "Gamma".into(), l.clone(), mu.clone(), nu.clone()];
                let mut idx = [0usize; 3];
                for (slot, key) in idx.iter_mut().zip([l, mu, nu]) {
                    match key.parse::<usize>() {
                        Ok(i) if (1..=m).contains(&i) => *slot = i,
                        _ => return Err((path, format!("index `{key}` out of range 1..={m}"))),
                    }
                }
                out.push(((idx[0], idx[1], idx[2]), src.as_str()));
            }
        }
    }
    Ok(out)
}

/// Maps dotted field paths to source lines.
struct SpanIndex<'i> {
    src: &'i str,
    root: Option<DeTable<'i>>,
}

impl<'i> SpanIndex<'i> {
    fn new(src: &'i str) -> Self {
        SpanIndex { src, root: DeTable::parse(src).ok().map(|t| t.into_inner()) }
    }

    fn line(&self, path: &[String]) -> Option<usize> {
        let mut table = self.root.as_ref()?;
        let mut span = None;
        let mut iter = path.iter().peekable();
        while let Some(key) = iter.next() {
            let (k, v) = table.iter().find(|(k, _)| k.get_ref() == key.as_str())?;
            span = Some(k.span());
            let mut value = v;
            while let (DeValue::Array(items), Some(i)) =
                (value.get_ref(), iter.peek().and_then(|s| s.parse::<usize>().ok()))
            {
                iter.next();
                value = items.get(i)?;
                span = Some(value.span());
            }
            match value.get_ref() {
                DeValue::Table(t) => table = t,
                _ => break,
            }
        }
        span.map(|s| self.src[..s.start].matches('\n').count() + 1)
    }
}

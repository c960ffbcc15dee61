//! The `tansurf` command line.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 numerical failure, 4 I/O. Failures print a
//! JSON object `{"error", "message", "exit_code"}` on stderr.

pub mod export;
pub mod scene;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::classify::{classify_point, classify_via_frames, codim, scan_curve, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::genericity::{montecarlo_types, write_samples_csv, PerturbationSpec};
use crate::geodesic::integrate_geodesic;
use crate::normal_forms::{germ_eval, germ_jacobian, GermKind};
use crate::surface::{eval_surface, linspace, TangentSurfaceGrid};

pub use export::{export_mesh, MeshSummary};
pub use scene::{load_scene, write_scene, Projection, Scene};

#[derive(Debug, Parser)]
#[command(name = "tansurf", version, about = "Tangent surfaces of directed curves under affine connections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the surface germ at one parameter value.
    Classify {
        scene: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        t0: f64,
        /// Use the frame criteria instead of the covariant chain.
        #[arg(long)]
        via_frames: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Locate and classify non-cuspidal points on an interval.
    Scan {
        scene: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        t_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 401)]
        samples: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sample the surface on the scene grid and write an OBJ mesh.
    Mesh {
        scene: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// `pca` or a coordinate triple such as `1,2,4`.
        #[arg(long)]
        projection: Option<Projection>,
    },
    /// Integrate one geodesic and write it as CSV.
    Geodesic {
        scene: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        v: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        s_end: f64,
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Mesh of a model germ on [-1, 1]².
    NormalForm {
        #[arg(long)]
        kind: GermKind,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 41)]
        n: usize,
        #[arg(long)]
        projection: Option<Projection>,
    },
    /// Monte Carlo survey of ∇-types of random directed curves.
    Montecarlo {
        /// TOML or JSON perturbation spec.
        #[arg(long)]
        spec: PathBuf,
        /// Writes `<prefix>.csv` (samples) and `<prefix>.json` (summary).
        #[arg(short, long, default_value = "montecarlo")]
        output: PathBuf,
    },
    /// Codimension of a ∇-type.
    Codim {
        #[arg(long = "type", value_delimiter = ',', required = true)]
        orders: Vec<usize>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 4,
        Error::Parse(_)
        | Error::Validation(_)
        | Error::Syntax { .. }
        | Error::UnknownVariable(_)
        | Error::DimensionMismatch(_)
        | Error::MalformedType(_) => 2,
        _ => 3,
    }
}

pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": exit_code(e),
    })
    .to_string()
}

/// Parses `args`, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match run(&cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(&e));
            exit_code(&e)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Validation(format!("json: {e}")))
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n"))?,
        None => writeln!(stdout, "{text}")?,
    }
    Ok(())
}

pub fn run(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Classify { scene, t0, via_frames, output } => {
            let scene = load_scene(scene)?;
            let gamma = scene.connection()?;
            let curve = scene.directed_curve()?;
            let opts = scene.classify_options();
            let text = if *via_frames {
                to_json(&classify_via_frames(&gamma, &curve, *t0, &opts)?)?
            } else {
                to_json(&classify_point(&gamma, &curve, *t0, &opts)?)?
            };
            emit(&text, output.as_deref().or(scene.output.report.as_deref().map(Path::new)), stdout)
        }
        Command::Scan { scene, t_min, t_max, samples, output } => {
            let scene = load_scene(scene)?;
            let (lo, hi) = scene.t_range();
            let report = scan_curve(
                &scene.connection()?,
                &scene.directed_curve()?,
                (t_min.unwrap_or(lo), t_max.unwrap_or(hi)),
                *samples,
                &scene.classify_options(),
            )?;
            emit(&to_json(&report)?, output.as_deref().or(scene.output.report.as_deref().map(Path::new)), stdout)
        }
        Command::Mesh { scene, output, projection } => {
            let scene = load_scene(scene)?;
            let path = output
                .clone()
                .or(scene.output.mesh.as_ref().map(PathBuf::from))
                .ok_or_else(|| Error::Validation("mesh needs -o or output.mesh".into()))?;
            let grid = eval_surface(
                &scene.connection()?,
                &scene.directed_curve()?,
                scene.t_range(),
                scene.grid.s_range,
                scene.grid.n_t,
                scene.grid.n_s,
                &scene.integrator()?,
            )?;
            let projection = projection.unwrap_or(scene.output.projection);
            check_projection(projection, scene.dim)?;
            let summary = export_mesh(&grid, projection, &path)?;
            warn_dropped(&grid, stderr)?;
            writeln!(stdout, "{}", to_json(&summary)?)?;
            Ok(())
        }
        Command::Geodesic { scene, x, v, s_end, n, output } => {
            let scene = load_scene(scene)?;
            if x.len() != scene.dim || v.len() != scene.dim {
                return Err(Error::DimensionMismatch(format!(
                    "--x and --v need {} components, got {} and {}",
                    scene.dim,
                    x.len(),
                    v.len()
                )));
            }
            if *n < 2 {
                return Err(Error::Validation("--n must be at least 2".into()));
            }
            let s = linspace(0.0, *s_end, *n);
            let result = integrate_geodesic(&scene.connection()?, x, v, &s, &scene.integrator()?);
            let (states, err) = match result {
                Ok(states) => (states, None),
                Err(Error::BlowUp { s, partial }) => {
                    let partial = *partial;
                    (partial.clone(), Some(Error::BlowUp { s, partial: Box::new(partial) }))
                }
                Err(e) => return Err(e),
            };
            let mut buf = Vec::new();
            export::write_path_csv(&states, scene.dim, &mut buf)?;
            match output {
                Some(p) => std::fs::write(p, &buf)?,
                None => stdout.write_all(&buf)?,
            }
            err.map_or(Ok(()), Err)
        }
        Command::NormalForm { kind, output, n, projection } => {
            if *n < 2 {
                return Err(Error::Validation("--n must be at least 2".into()));
            }
            let grid = germ_grid(*kind, *n)?;
            let projection = projection.unwrap_or_default();
            check_projection(projection, kind.dim())?;
            let summary = export_mesh(&grid, projection, output)?;
            writeln!(stdout, "{}", to_json(&summary)?)?;
            Ok(())
        }
        Command::Montecarlo { spec, output } => {
            let spec = load_spec(spec)?;
            let (report, samples) = montecarlo_types(&spec)?;
            let csv = output.with_extension("csv");
            let json = output.with_extension("json");
            write_samples_csv(&samples, &csv)?;
            let text = to_json(&report)?;
            std::fs::write(&json, format!("{text}\n"))?;
            writeln!(stdout, "{text}")?;
            Ok(())
        }
        Command::Codim { orders } => {
            writeln!(stdout, "{}", codim(orders, orders.len())?)?;
            Ok(())
        }
    }
}

fn check_projection(projection: Projection, dim: usize) -> Result<()> {
    match projection {
        Projection::Coordinates(idx) if dim >= 3 && idx.iter().any(|&i| i == 0 || i > dim) => {
            Err(Error::Validation(format!("projection {projection} outside 1..={dim}")))
        }
        Projection::Pca if dim < 3 => Err(Error::Validation("pca needs dimension ≥ 3".into())),
        _ => Ok(()),
    }
}

fn warn_dropped(grid: &TangentSurfaceGrid, stderr: &mut dyn Write) -> Result<()> {
    for i in grid.failed_columns() {
        let col = &grid.columns[i];
        writeln!(stderr, "warning: dropped column t = {} ({})", col.t, col.error.as_deref().unwrap_or(""))?;
    }
    Ok(())
}

/// Germ sampled on an `n × n` grid over `[-1, 1]²`.
pub fn germ_grid(kind: GermKind, n: usize) -> Result<TangentSurfaceGrid> {
    kind.validate()?;
    let axis = linspace(-1.0, 1.0, n);
    Ok(TangentSurfaceGrid::from_fn(kind.dim(), axis.clone(), axis, |t, s| {
        let p = germ_eval(kind, t, s).expect("validated");
        let (ft, fs) = germ_jacobian(kind, t, s).expect("validated");
        (p, ft, fs)
    }))
}

fn load_spec(path: &Path) -> Result<PerturbationSpec> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let spec: PerturbationSpec = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&src).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&src).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
    };
    spec.validate()?;
    Ok(spec)
}

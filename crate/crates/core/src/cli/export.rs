//! OBJ meshes, CSV sidecars and geodesic paths.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cli::scene::Projection;
use crate::error::Result;
use crate::geodesic::GeodesicState;
use crate::surface::TangentSurfaceGrid;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub obj: PathBuf,
    pub csv: PathBuf,
    pub vertices: usize,
    pub faces: usize,
    /// `t` values of columns left out because their integration failed.
    pub dropped_columns: Vec<f64>,
}

/// The sidecar path: `out.obj` → `out.csv`.
pub fn sidecar_path(obj: &Path) -> PathBuf {
    obj.with_extension("csv")
}

/// Maps `m`-dimensional points to 3-space. Coordinates beyond `m` read as zero.
pub fn project(points: &[&[f64]], projection: Projection) -> Vec<[f64; 3]> {
    match projection {
        Projection::Coordinates(idx) => points
            .iter()
            .map(|p| idx.map(|i| p.get(i - 1).copied().unwrap_or(0.0)))
            .collect(),
        Projection::Pca => pca_project(points),
    }
}

/// Coordinates in the best-fit 3-plane through the centroid. Each axis is signed so
/// that its largest component is positive.
fn pca_project(points: &[&[f64]]) -> Vec<[f64; 3]> {
    let n = points.len();
    let m = points.first().map_or(0, |p| p.len());
    if n == 0 {
        return Vec::new();
    }
    let mean: Vec<f64> = (0..m).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, m, |i, k| points[i][k] - mean[k]);
    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let axes: Vec<Vec<f64>> = (0..3)
        .map(|r| match order.get(r) {
            Some(&row) => {
                let axis: Vec<f64> = v_t.row(row).iter().copied().collect();
                let lead = axis.iter().copied().fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
                axis.into_iter().map(|x| if lead < 0.0 { -x } else { x }).collect()
            }
            None => vec![0.0; m],
        })
        .collect();
    (0..n)
        .map(|i| {
            let row = centered.row(i);
            let mut out = [0.0; 3];
            for (o, axis) in out.iter_mut().zip(&axes) {
                *o = row.iter().zip(axis).map(|(a, b)| a * b).sum();
            }
            out
        })
        .collect()
}

/// Writes `path` (OBJ) and its CSV sidecar. Vertices are numbered row-major with one
/// row per kept `t` column; failed columns are skipped and no faces span the gap.
pub fn export_mesh(grid: &TangentSurfaceGrid, projection: Projection, path: &Path) -> Result<MeshSummary> {
    let n_s = grid.s.len();
    let kept: Vec<usize> = (0..grid.columns.len()).filter(|&i| !grid.columns[i].failed()).collect();
    let points: Vec<&[f64]> = kept
        .iter()
        .flat_map(|&i| grid.columns[i].points.iter().map(|p| p.point.as_slice()))
        .collect();
    let projected = project(&points, projection);

    let mut obj = BufWriter::new(std::fs::File::create(path)?);
    writeln!(obj, "# tansurf mesh: {} x {} nodes, dim {}, projection {}", kept.len(), n_s, grid.dim, projection)?;
    for v in &projected {
        writeln!(obj, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
    }
    let mut faces = 0;
    for (r, pair) in kept.windows(2).enumerate() {
        if pair[1] != pair[0] + 1 {
            continue;
        }
        for j in 0..n_s.saturating_sub(1) {
            let a = r * n_s + j + 1;
            let b = (r + 1) * n_s + j + 1;
            writeln!(obj, "f {} {} {}", a, b, b + 1)?;
            writeln!(obj, "f {} {} {}", a, b + 1, a + 1)?;
            faces += 2;
        }
    }
    obj.flush()?;

    let csv = sidecar_path(path);
    let mut out = BufWriter::new(std::fs::File::create(&csv)?);
    write!(out, "i,j,t,s")?;
    for k in 1..=grid.dim {
        write!(out, ",x{k}")?;
    }
    writeln!(out, ",sigma_min,sigma_max")?;
    for &i in &kept {
        for (j, p) in grid.columns[i].points.iter().enumerate() {
            write!(out, "{i},{j},{:.16e},{:.16e}", grid.t[i], grid.s[j])?;
            for x in &p.point {
                write!(out, ",{x:.16e}")?;
            }
            writeln!(out, ",{:.16e},{:.16e}", p.sigma_min, p.sigma_max)?;
        }
    }
    out.flush()?;

    Ok(MeshSummary {
        obj: path.to_path_buf(),
        csv,
        vertices: projected.len(),
        faces,
        dropped_columns: grid.failed_columns().iter().map(|&i| grid.t[i]).collect(),
    })
}

/// `s,x1..xm,v1..vm`, one row per state.
pub fn write_path_csv(states: &[GeodesicState], dim: usize, out: &mut impl Write) -> Result<()> {
    write!(out, "s")?;
    for k in 1..=dim {
        write!(out, ",x{k}")?;
    }
    for k in 1..=dim {
        write!(out, ",v{k}")?;
    }
    writeln!(out)?;
    for st in states {
        write!(out, "{:.16e}", st.s)?;
        for x in st.point().iter().chain(&st.speed()) {
            write!(out, ",{x:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

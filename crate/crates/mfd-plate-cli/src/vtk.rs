//! Legacy ASCII VTK export with native polygon cells.
//!
//! Vertex fields: deflection (scalar) and rotation (vector). The edge shear
//! is visualization-only: a constant vector per cell reconstructed from the
//! tangential edge values by least squares.

use mfd_plate::mesh::PolygonalMesh;
use mfd_plate::spaces::{DeflectionField, RotationField, ShearField};
use nalgebra::{Matrix2, Vector2};
use std::io::Write;
use std::path::Path;

pub fn write_vtk(
    path: &Path,
    mesh: &PolygonalMesh,
    deflection: &DeflectionField,
    rotation: &RotationField,
    shear: Option<&ShearField>,
) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "plate solution")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;

    let nv = mesh.num_vertices();
    writeln!(out, "POINTS {nv} double")?;
    for v in 0..nv {
        let p = mesh.vertex(v);
        writeln!(out, "{} {} 0", p.x, p.y)?;
    }

    let nc = mesh.num_cells();
    let list_len: usize = mesh.cells().iter().map(|c| c.num_vertices() + 1).sum();
    writeln!(out, "CELLS {nc} {list_len}")?;
    for cell in mesh.cells() {
        write!(out, "{}", cell.num_vertices())?;
        for &v in &cell.vertices {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(out, "7")?; // VTK_POLYGON
    }

    writeln!(out, "POINT_DATA {nv}")?;
    writeln!(out, "SCALARS deflection double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in 0..nv {
        writeln!(out, "{}", deflection.0[v])?;
    }
    writeln!(out, "VECTORS rotation double")?;
    for v in 0..nv {
        let r = rotation.0[v];
        writeln!(out, "{} {} 0", r.x, r.y)?;
    }

    if let Some(shear) = shear {
        writeln!(out, "CELL_DATA {nc}")?;
        writeln!(out, "VECTORS shear double")?;
        for c in 0..nc {
            let g = cell_average_vector(mesh, c, &shear.0[c]);
            writeln!(out, "{} {} 0", g.x, g.y)?;
        }
    }
    Ok(())
}

/// Constant vector minimizing the length-weighted misfit against the
/// tangential edge values of one cell.
fn cell_average_vector(mesh: &PolygonalMesh, cell: usize, values: &[f64]) -> Vector2<f64> {
    let c = mesh.cell(cell);
    let m = c.num_vertices();
    let mut normal = Matrix2::<f64>::zeros();
    let mut rhs = Vector2::<f64>::zeros();
    for k in 0..m {
        let a = mesh.vertex(c.vertices[k]);
        let b = mesh.vertex(c.vertices[(k + 1) % m]);
        let d = b - a;
        let len = d.norm();
        let t = d / len;
        normal += len * t * t.transpose();
        rhs += len * values[k] * t;
    }
    normal.try_inverse().map(|inv| inv * rhs).unwrap_or_default()
}

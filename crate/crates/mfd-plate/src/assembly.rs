//! Global sparse symmetric systems.
//!
//! Element matrices are computed cell-parallel, then scattered sequentially
//! in cell order into triplet storage, so assembled numbers are reproducible
//! run to run regardless of thread count. Dirichlet dofs are eliminated;
//! prescribed (lift) values contribute a right-hand-side correction.

use crate::error::{Error, Result};
use crate::local_forms::{self, MaterialParams, SigmaTensor};
use crate::mesh::PolygonalMesh;
use crate::spaces::{DofKind, DofMap};
use crate::Point;
use rayon::prelude::*;
use sprs::{CsMat, TriMat};
use std::io::Write;

/// Assembled symmetric sparse operator on the free dofs, with optional
/// right-hand-side correction from inhomogeneous Dirichlet data.
#[derive(Debug, Clone)]
pub struct SparseSymSystem {
    dim: usize,
    matrix: CsMat<f64>,
    /// Lift correction to add to any load vector for this operator.
    pub lift_rhs: Vec<f64>,
    /// Row bookkeeping: owning vertex and dof kind per global index.
    pub row_info: Vec<(usize, DofKind)>,
}

impl SparseSymSystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// CSR view of the operator.
    pub fn matrix(&self) -> &CsMat<f64> {
        &self.matrix
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            let mut acc = 0.0;
            for (col, &v) in vec.iter() {
                acc += v * x[col];
            }
            y[row] = acc;
        }
        y
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        let t = self.matrix.transpose_view().to_csr();
        t.indptr().raw_storage() == self.matrix.indptr().raw_storage()
            && t.indices() == self.matrix.indices()
            && t.data()
                .iter()
                .zip(self.matrix.data())
                .all(|(a, b)| a == b)
    }

    /// Writes the operator in coordinate text format (row col value).
    pub fn write_coo<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "% symmetric sparse matrix, {0} x {0}", self.dim)?;
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            for (col, &v) in vec.iter() {
                writeln!(out, "{row} {col} {v}")?;
            }
        }
        Ok(())
    }
}

/// Per-cell map from local slots (rotations then deflections) to either a
/// free global index or an eliminated slot with its prescribed value.
fn local_to_global(
    mesh: &PolygonalMesh,
    dofmap: &DofMap,
    cell: usize,
) -> Vec<(Option<usize>, f64)> {
    let vs = &mesh.cell(cell).vertices;
    let m = vs.len();
    let mut map = Vec::with_capacity(3 * m);
    for &v in vs {
        for c in 0..2 {
            map.push((dofmap.rot_index[v][c], dofmap.rot_value[v][c]));
        }
    }
    for &v in vs {
        map.push((dofmap.w_index[v], dofmap.w_value[v]));
    }
    map
}

/// Scatters the upper triangle only; the assembled matrix is mirrored
/// afterwards, which makes it exactly symmetric independent of summation
/// order. Eliminated columns contribute to the lift correction instead.
fn scatter_symmetric(
    tri: &mut TriMat<f64>,
    lift_rhs: &mut [f64],
    local: &nalgebra::DMatrix<f64>,
    map: &[(Option<usize>, f64)],
) {
    for (i, &(gi, _)) in map.iter().enumerate() {
        let Some(gi) = gi else { continue };
        for (j, &(gj, lift)) in map.iter().enumerate() {
            let v = local[(i, j)];
            if v == 0.0 {
                continue;
            }
            match gj {
                Some(gj) => {
                    if gi <= gj {
                        tri.add_triplet(gi, gj, v);
                    }
                }
                None => {
                    if lift != 0.0 {
                        lift_rhs[gi] -= v * lift;
                    }
                }
            }
        }
    }
}

/// Compresses upper-triangle triplets and mirrors them into a full
/// symmetric CSR matrix.
fn mirror_upper(tri: TriMat<f64>) -> CsMat<f64> {
    let upper = tri.to_csr::<usize>();
    let (rows, cols) = (upper.rows(), upper.cols());
    let mut full = TriMat::new((rows, cols));
    for (row, vec) in upper.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            full.add_triplet(row, col, v);
            if row != col {
                full.add_triplet(col, row, v);
            }
        }
    }
    full.to_csr()
}

fn row_info(dofmap: &DofMap) -> Vec<(usize, DofKind)> {
    let mut info = vec![(usize::MAX, DofKind::Deflection); dofmap.num_dofs()];
    for (v, pair) in dofmap.rot_index.iter().enumerate() {
        if let Some(i) = pair[0] {
            info[i] = (v, DofKind::RotationX);
        }
        if let Some(i) = pair[1] {
            info[i] = (v, DofKind::RotationY);
        }
    }
    for (v, &idx) in dofmap.w_index.iter().enumerate() {
        if let Some(i) = idx {
            info[i] = (v, DofKind::Deflection);
        }
    }
    info
}

fn annotate_cell(e: Error, cell: usize) -> Error {
    match e {
        Error::DegenerateCell { area, diameter, .. } => Error::DegenerateCell {
            cell,
            area,
            diameter,
        },
        Error::IllConditionedCell { cond, .. } => Error::IllConditionedCell { cell, cond },
        Error::NonPositiveWeights { .. } => Error::NonPositiveWeights { cell },
        other => other,
    }
}

/// Assembles the plate stiffness operator.
pub fn assemble_stiffness(
    mesh: &PolygonalMesh,
    dofmap: &DofMap,
    mat: &MaterialParams,
) -> Result<SparseSymSystem> {
    let locals: Vec<Result<nalgebra::DMatrix<f64>>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.cell_geometry(c)?;
            Ok(local_forms::stiffness(&geom, mat)?.matrix)
        })
        .collect();

    let n = dofmap.num_dofs();
    let mut tri = TriMat::new((n, n));
    let mut lift_rhs = vec![0.0; n];
    for (c, local) in locals.into_iter().enumerate() {
        let local = local.map_err(|e| annotate_cell(e, c))?;
        let map = local_to_global(mesh, dofmap, c);
        scatter_symmetric(&mut tri, &mut lift_rhs, &local, &map);
    }
    Ok(SparseSymSystem {
        dim: n,
        matrix: mirror_upper(tri),
        lift_rhs,
        row_info: row_info(dofmap),
    })
}

/// Assembles the load vector for a transversal load. Rotation slots receive
/// nothing; each deflection slot gets the cell-average load times its vertex
/// weight.
pub fn assemble_load(
    mesh: &PolygonalMesh,
    dofmap: &DofMap,
    g: impl Fn(Point) -> f64 + Sync,
) -> Result<Vec<f64>> {
    let locals: Vec<Result<(Vec<f64>, f64)>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.cell_geometry(c)?;
            let weights = local_forms::vertex_weights(&geom)?;
            let g_bar = local_forms::cell_average(&geom, &g);
            Ok((weights, g_bar))
        })
        .collect();

    let mut f = vec![0.0; dofmap.num_dofs()];
    for (c, local) in locals.into_iter().enumerate() {
        let (weights, g_bar) = local.map_err(|e| annotate_cell(e, c))?;
        for (i, &v) in mesh.cell(c).vertices.iter().enumerate() {
            if let Some(gi) = dofmap.w_index[v] {
                f[gi] += g_bar * weights[i];
            }
        }
    }
    Ok(f)
}

/// Assembles the diagonal mass operator.
pub fn assemble_mass(
    mesh: &PolygonalMesh,
    dofmap: &DofMap,
    mat: &MaterialParams,
) -> Result<SparseSymSystem> {
    let locals: Vec<Result<Vec<f64>>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.cell_geometry(c)?;
            local_forms::vertex_weights(&geom)
        })
        .collect();

    let n = dofmap.num_dofs();
    let mut diag = vec![0.0; n];
    let rot_scale = mat.thickness * mat.thickness / 12.0;
    for (c, weights) in locals.into_iter().enumerate() {
        let weights = weights.map_err(|e| annotate_cell(e, c))?;
        for (i, &v) in mesh.cell(c).vertices.iter().enumerate() {
            for comp in 0..2 {
                if let Some(gi) = dofmap.rot_index[v][comp] {
                    diag[gi] += rot_scale * weights[i];
                }
            }
            if let Some(gi) = dofmap.w_index[v] {
                diag[gi] += weights[i];
            }
        }
    }
    let mut tri = TriMat::new((n, n));
    for (i, &d) in diag.iter().enumerate() {
        tri.add_triplet(i, i, d);
    }
    Ok(SparseSymSystem {
        dim: n,
        matrix: tri.to_csr(),
        lift_rhs: vec![0.0; n],
        row_info: row_info(dofmap),
    })
}

/// Assembles the geometric-stress operator of the buckling problem: it acts
/// on deflection dofs only, rotation rows and columns stay empty.
pub fn assemble_buckling(
    mesh: &PolygonalMesh,
    dofmap: &DofMap,
    sigma: &SigmaTensor,
) -> Result<SparseSymSystem> {
    let locals: Vec<Result<nalgebra::DMatrix<f64>>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.cell_geometry(c)?;
            local_forms::buckling_matrix(&geom, sigma)
        })
        .collect();

    let n = dofmap.num_dofs();
    let mut tri = TriMat::new((n, n));
    for (c, local) in locals.into_iter().enumerate() {
        let local = local.map_err(|e| annotate_cell(e, c))?;
        let vs = &mesh.cell(c).vertices;
        for (i, &vi) in vs.iter().enumerate() {
            let Some(gi) = dofmap.w_index[vi] else { continue };
            for (j, &vj) in vs.iter().enumerate() {
                let v = local[(i, j)];
                if v == 0.0 {
                    continue;
                }
                if let Some(gj) = dofmap.w_index[vj] {
                    if gi <= gj {
                        tri.add_triplet(gi, gj, v);
                    }
                }
            }
        }
    }
    Ok(SparseSymSystem {
        dim: n,
        matrix: mirror_upper(tri),
        lift_rhs: vec![0.0; n],
        row_info: row_info(dofmap),
    })
}

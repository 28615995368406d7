//! Degree-of-freedom bookkeeping and discrete fields.
//!
//! Three discrete spaces are in play: vertex deflections, vertex rotations
//! (two components per vertex) and edge shears. Shear values are tangential
//! edge averages stored per cell edge with the cell's own tangent, so the
//! two copies of an interior edge carry opposite signs. Shears are derived
//! quantities only; the global unknowns are deflections and rotations after
//! boundary elimination.

use crate::error::{Error, Result};
use crate::mesh::{PolygonalMesh, Side};
use crate::{Point, Vec2};

/// Per-side essential boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideCondition {
    /// Deflection and both rotation components eliminated.
    Clamped,
    /// Deflection eliminated; with hard support also the rotation component
    /// tangential to the side.
    SimplySupported,
    /// Nothing eliminated.
    Free,
}

impl SideCondition {
    fn from_char(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'C' => Ok(SideCondition::Clamped),
            'S' => Ok(SideCondition::SimplySupported),
            'F' => Ok(SideCondition::Free),
            _ => Err(Error::InvalidInput(format!(
                "unknown side condition `{c}` (expected C, S or F)"
            ))),
        }
    }
}

/// Boundary conditions for the four sides, in bottom/right/top/left order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryConditions {
    pub bottom: SideCondition,
    pub right: SideCondition,
    pub top: SideCondition,
    pub left: SideCondition,
    /// Hard simple support additionally eliminates the tangential rotation
    /// component on simply supported sides.
    pub hard_support: bool,
}

impl BoundaryConditions {
    pub fn new(sides: [SideCondition; 4]) -> Self {
        BoundaryConditions {
            bottom: sides[0],
            right: sides[1],
            top: sides[2],
            left: sides[3],
            hard_support: false,
        }
    }

    pub fn clamped() -> Self {
        Self::new([SideCondition::Clamped; 4])
    }

    pub fn simply_supported() -> Self {
        Self::new([SideCondition::SimplySupported; 4])
    }

    pub fn with_hard_support(mut self, hard: bool) -> Self {
        self.hard_support = hard;
        self
    }

    /// Parses strings like `CCCC`, `SSSS` or `CCCF` (bottom, right, top, left).
    pub fn parse(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 4 {
            return Err(Error::InvalidInput(format!(
                "boundary condition `{s}` must have exactly four letters"
            )));
        }
        Ok(Self::new([
            SideCondition::from_char(chars[0])?,
            SideCondition::from_char(chars[1])?,
            SideCondition::from_char(chars[2])?,
            SideCondition::from_char(chars[3])?,
        ]))
    }

    pub fn side(&self, side: Side) -> SideCondition {
        match side {
            Side::Bottom => self.bottom,
            Side::Right => self.right,
            Side::Top => self.top,
            Side::Left => self.left,
        }
    }
}

impl std::fmt::Display for BoundaryConditions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for side in [self.bottom, self.right, self.top, self.left] {
            let c = match side {
                SideCondition::Clamped => 'C',
                SideCondition::SimplySupported => 'S',
                SideCondition::Free => 'F',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Which kind of unknown a global matrix row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    RotationX,
    RotationY,
    Deflection,
}

/// Global indices for the free unknowns plus prescribed values for the
/// eliminated ones. Rotation dofs come first (vertex order, x then y),
/// deflections after.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub rot_index: Vec<[Option<usize>; 2]>,
    pub w_index: Vec<Option<usize>>,
    /// Prescribed rotation values at eliminated slots (Dirichlet lift).
    pub rot_value: Vec<Vec2>,
    /// Prescribed deflection values at eliminated vertices.
    pub w_value: Vec<f64>,
    pub num_rot: usize,
    pub num_w: usize,
}

impl DofMap {
    /// Builds the map for the given boundary conditions with homogeneous
    /// (zero) prescribed values.
    pub fn build(mesh: &PolygonalMesh, bc: &BoundaryConditions) -> DofMap {
        let nv = mesh.num_vertices();
        let mut rot_fixed = vec![[false; 2]; nv];
        let mut w_fixed = vec![false; nv];
        for v in 0..nv {
            for side in mesh.vertex_sides(v).iter() {
                match bc.side(side) {
                    SideCondition::Clamped => {
                        rot_fixed[v] = [true, true];
                        w_fixed[v] = true;
                    }
                    SideCondition::SimplySupported => {
                        w_fixed[v] = true;
                        if bc.hard_support {
                            let t = side.tangent();
                            // sides of the unit square are axis-aligned, so the
                            // tangential rotation is a single component
                            if t.x.abs() > 0.5 {
                                rot_fixed[v][0] = true;
                            } else {
                                rot_fixed[v][1] = true;
                            }
                        }
                    }
                    SideCondition::Free => {}
                }
            }
        }

        let mut rot_index = vec![[None; 2]; nv];
        let mut next = 0usize;
        for v in 0..nv {
            for c in 0..2 {
                if !rot_fixed[v][c] {
                    rot_index[v][c] = Some(next);
                    next += 1;
                }
            }
        }
        let num_rot = next;
        let mut w_index = vec![None; nv];
        for (v, idx) in w_index.iter_mut().enumerate() {
            if !w_fixed[v] {
                *idx = Some(next);
                next += 1;
            }
        }
        let num_w = next - num_rot;

        DofMap {
            rot_index,
            w_index,
            rot_value: vec![Vec2::zeros(); nv],
            w_value: vec![0.0; nv],
            num_rot,
            num_w,
        }
    }

    /// Records inhomogeneous Dirichlet data for the eliminated dofs.
    pub fn set_lift(
        &mut self,
        mesh: &PolygonalMesh,
        w: impl Fn(Point) -> f64,
        beta: impl Fn(Point) -> Vec2,
    ) {
        for v in 0..mesh.num_vertices() {
            let p = mesh.vertex(v);
            if self.w_index[v].is_none() {
                self.w_value[v] = w(p);
            }
            let b = beta(p);
            for c in 0..2 {
                if self.rot_index[v][c].is_none() {
                    self.rot_value[v][c] = b[c];
                }
            }
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.num_rot + self.num_w
    }

    /// (vertex, kind) of a global row index.
    pub fn dof_info(&self, row: usize) -> Option<(usize, DofKind)> {
        for (v, pair) in self.rot_index.iter().enumerate() {
            if pair[0] == Some(row) {
                return Some((v, DofKind::RotationX));
            }
            if pair[1] == Some(row) {
                return Some((v, DofKind::RotationY));
            }
        }
        for (v, &idx) in self.w_index.iter().enumerate() {
            if idx == Some(row) {
                return Some((v, DofKind::Deflection));
            }
        }
        None
    }

    /// Packs full per-vertex fields into a free-dof vector.
    pub fn to_free(&self, rot: &RotationField, w: &DeflectionField) -> Vec<f64> {
        let mut x = vec![0.0; self.num_dofs()];
        for (v, pair) in self.rot_index.iter().enumerate() {
            for c in 0..2 {
                if let Some(i) = pair[c] {
                    x[i] = rot.0[v][c];
                }
            }
        }
        for (v, &idx) in self.w_index.iter().enumerate() {
            if let Some(i) = idx {
                x[i] = w.0[v];
            }
        }
        x
    }

    /// Expands a free-dof vector into full per-vertex fields, reinstating the
    /// prescribed lift values at eliminated slots.
    pub fn from_free(&self, x: &[f64]) -> (RotationField, DeflectionField) {
        let nv = self.w_index.len();
        let mut rot = vec![Vec2::zeros(); nv];
        let mut w = vec![0.0; nv];
        for v in 0..nv {
            for c in 0..2 {
                rot[v][c] = match self.rot_index[v][c] {
                    Some(i) => x[i],
                    None => self.rot_value[v][c],
                };
            }
            w[v] = match self.w_index[v] {
                Some(i) => x[i],
                None => self.w_value[v],
            };
        }
        (RotationField(rot), DeflectionField(w))
    }
}

/// Vertex deflection values over the whole mesh (free and eliminated alike).
#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionField(pub Vec<f64>);

/// Vertex rotation values over the whole mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationField(pub Vec<Vec2>);

/// Tangential edge averages stored per cell edge, using the cell's own
/// tangent (so interior edges appear with opposite signs in their two cells).
#[derive(Debug, Clone, PartialEq)]
pub struct ShearField(pub Vec<Vec<f64>>);

impl DeflectionField {
    pub fn zeros(mesh: &PolygonalMesh) -> Self {
        DeflectionField(vec![0.0; mesh.num_vertices()])
    }
}

impl RotationField {
    pub fn zeros(mesh: &PolygonalMesh) -> Self {
        RotationField(vec![Vec2::zeros(); mesh.num_vertices()])
    }
}

impl ShearField {
    pub fn zeros(mesh: &PolygonalMesh) -> Self {
        ShearField(
            mesh.cells()
                .iter()
                .map(|c| vec![0.0; c.num_vertices()])
                .collect(),
        )
    }
}

/// Vertex interpolation of a scalar field.
pub fn interp_scalar(f: impl Fn(Point) -> f64, mesh: &PolygonalMesh) -> DeflectionField {
    DeflectionField((0..mesh.num_vertices()).map(|v| f(mesh.vertex(v))).collect())
}

/// Vertex interpolation of a 2D vector field.
pub fn interp_vector(f: impl Fn(Point) -> Vec2, mesh: &PolygonalMesh) -> RotationField {
    RotationField((0..mesh.num_vertices()).map(|v| f(mesh.vertex(v))).collect())
}

/// Edge interpolation: tangential average along every cell edge, by two-point
/// Gauss quadrature (exact for linear integrands).
pub fn interp_shear(f: impl Fn(Point) -> Vec2, mesh: &PolygonalMesh) -> ShearField {
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    let values = mesh
        .cells()
        .iter()
        .map(|cell| {
            let m = cell.num_vertices();
            (0..m)
                .map(|k| {
                    let a = mesh.vertex(cell.vertices[k]);
                    let b = mesh.vertex(cell.vertices[(k + 1) % m]);
                    let mid = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
                    let half = (b - a) * 0.5;
                    let t = (b - a) / (b - a).norm();
                    let g1 = mid - half * inv_sqrt3;
                    let g2 = mid + half * inv_sqrt3;
                    0.5 * (f(g1) + f(g2)).dot(&t)
                })
                .collect()
        })
        .collect();
    ShearField(values)
}

/// Discrete gradient: per cell edge, the difference quotient of the endpoint
/// deflections along the cell tangent.
pub fn discrete_gradient(w: &DeflectionField, mesh: &PolygonalMesh) -> ShearField {
    let values = mesh
        .cells()
        .iter()
        .map(|cell| {
            let m = cell.num_vertices();
            (0..m)
                .map(|k| {
                    let a = cell.vertices[k];
                    let b = cell.vertices[(k + 1) % m];
                    let len = (mesh.vertex(b) - mesh.vertex(a)).norm();
                    (w.0[b] - w.0[a]) / len
                })
                .collect()
        })
        .collect();
    ShearField(values)
}

/// Reduction operator: endpoint-average rotation projected on the cell
/// tangent of every edge.
pub fn reduction(rot: &RotationField, mesh: &PolygonalMesh) -> ShearField {
    let values = mesh
        .cells()
        .iter()
        .map(|cell| {
            let m = cell.num_vertices();
            (0..m)
                .map(|k| {
                    let a = cell.vertices[k];
                    let b = cell.vertices[(k + 1) % m];
                    let d = mesh.vertex(b) - mesh.vertex(a);
                    let t = d / d.norm();
                    0.5 * (rot.0[a] + rot.0[b]).dot(&t)
                })
                .collect()
        })
        .collect();
    ShearField(values)
}

// ---------------------------------------------------------------------------
// Discrete norms
// ---------------------------------------------------------------------------

/// H1-type seminorm of a deflection field.
pub fn deflection_norm(w: &DeflectionField, mesh: &PolygonalMesh) -> f64 {
    let mut sum = 0.0;
    for cell in mesh.cells() {
        let m = cell.num_vertices();
        let mut area2 = 0.0;
        let mut local = 0.0;
        for k in 0..m {
            let a = cell.vertices[k];
            let b = cell.vertices[(k + 1) % m];
            let pa = mesh.vertex(a);
            let pb = mesh.vertex(b);
            area2 += pa.x * pb.y - pb.x * pa.y;
            let len = (pb - pa).norm();
            let d = (w.0[b] - w.0[a]) / len;
            local += d * d;
        }
        sum += 0.5 * area2 * local;
    }
    sum.sqrt()
}

/// H1-type seminorm of a rotation field (the triple-bar norm).
pub fn rotation_norm(rot: &RotationField, mesh: &PolygonalMesh) -> f64 {
    let mut sum = 0.0;
    for cell in mesh.cells() {
        let m = cell.num_vertices();
        let mut area2 = 0.0;
        let mut local = 0.0;
        for k in 0..m {
            let a = cell.vertices[k];
            let b = cell.vertices[(k + 1) % m];
            let pa = mesh.vertex(a);
            let pb = mesh.vertex(b);
            area2 += pa.x * pb.y - pb.x * pa.y;
            let len = (pb - pa).norm();
            let d = (rot.0[a] - rot.0[b]).norm() / len;
            local += d * d;
        }
        sum += 0.5 * area2 * local;
    }
    sum.sqrt()
}

/// Strain-type norm of a rotation field: per cell, the triple-bar seminorm
/// minimized over linearized spins around the barycenter. The minimizer is a
/// one-dimensional least squares problem with a closed form.
pub fn rotation_energy_norm(rot: &RotationField, mesh: &PolygonalMesh) -> f64 {
    let mut sum = 0.0;
    for (c, cell) in mesh.cells().iter().enumerate() {
        let geom = match mesh.cell_geometry(c) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let m = cell.num_vertices();
        // spin field (-y, x) around the barycenter, interpolated at vertices
        let spin: Vec<Vec2> = (0..m)
            .map(|k| {
                let d = geom.centered[k];
                Vec2::new(-d.y, d.x)
            })
            .collect();
        let mut q_rr = 0.0;
        let mut q_er = 0.0;
        for k in 0..m {
            let a = cell.vertices[k];
            let b = cell.vertices[(k + 1) % m];
            let w = geom.area / (geom.edge_len[k] * geom.edge_len[k]);
            let de = rot.0[a] - rot.0[b];
            let dr = spin[k] - spin[(k + 1) % m];
            q_er += w * de.dot(&dr);
            q_rr += w * dr.norm_squared();
        }
        let c_star = if q_rr > 0.0 { q_er / q_rr } else { 0.0 };
        // evaluate the residual at the minimizer directly; subtracting the
        // quadratic forms cancels catastrophically for near-kernel fields
        let mut local = 0.0;
        for k in 0..m {
            let a = cell.vertices[k];
            let b = cell.vertices[(k + 1) % m];
            let w = geom.area / (geom.edge_len[k] * geom.edge_len[k]);
            let de = rot.0[a] - rot.0[b];
            let dr = spin[k] - spin[(k + 1) % m];
            local += w * (de - dr * c_star).norm_squared();
        }
        sum += local;
    }
    sum.sqrt()
}

/// L2-type norm of a shear field.
pub fn shear_norm(shear: &ShearField, mesh: &PolygonalMesh) -> f64 {
    let mut sum = 0.0;
    for (c, cell) in mesh.cells().iter().enumerate() {
        let m = cell.num_vertices();
        let mut area2 = 0.0;
        for k in 0..m {
            let pa = mesh.vertex(cell.vertices[k]);
            let pb = mesh.vertex(cell.vertices[(k + 1) % m]);
            area2 += pa.x * pb.y - pb.x * pa.y;
        }
        let local: f64 = shear.0[c].iter().map(|d| d * d).sum();
        sum += 0.5 * area2 * local;
    }
    sum.sqrt()
}

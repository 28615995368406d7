//! Conforming polygonal meshes of the unit square.
//!
//! A mesh stores vertices, undirected edges with a fixed global orientation,
//! and cells as counterclockwise vertex/edge cycles. Boundary vertices and
//! edges carry side tags (bottom/right/top/left). Meshes are immutable after
//! construction and safe to share across threads.

mod families;
mod io;

pub use families::{generate_mesh, MeshFamily};
pub use io::{export_mesh, import_mesh, read_mesh, write_mesh};

use crate::error::{Error, Result};
use crate::{Point, Vec2};

/// Geometric tolerance for recognizing points on the unit-square boundary.
const SIDE_TOL: f64 = 1e-12;

/// One of the four sides of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn name(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        }
    }

    pub fn from_name(s: &str) -> Option<Side> {
        match s {
            "bottom" => Some(Side::Bottom),
            "right" => Some(Side::Right),
            "top" => Some(Side::Top),
            "left" => Some(Side::Left),
            _ => None,
        }
    }

    fn bit(self) -> u8 {
        match self {
            Side::Bottom => 1,
            Side::Right => 2,
            Side::Top => 4,
            Side::Left => 8,
        }
    }

    /// Unit tangent direction along the side.
    pub fn tangent(self) -> Vec2 {
        match self {
            Side::Bottom | Side::Top => Vec2::new(1.0, 0.0),
            Side::Left | Side::Right => Vec2::new(0.0, 1.0),
        }
    }

    fn contains(self, p: &Point) -> bool {
        match self {
            Side::Bottom => p.y.abs() <= SIDE_TOL,
            Side::Top => (p.y - 1.0).abs() <= SIDE_TOL,
            Side::Left => p.x.abs() <= SIDE_TOL,
            Side::Right => (p.x - 1.0).abs() <= SIDE_TOL,
        }
    }
}

/// Set of sides a boundary vertex belongs to (corners belong to two).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SideSet(u8);

impl SideSet {
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, side: Side) -> bool {
        self.0 & side.bit() != 0
    }

    pub fn insert(&mut self, side: Side) {
        self.0 |= side.bit();
    }

    pub fn iter(self) -> impl Iterator<Item = Side> {
        Side::ALL.into_iter().filter(move |s| self.contains(*s))
    }
}

/// Undirected mesh edge with a fixed global orientation.
///
/// The global tangent points from `vertices[0]` to `vertices[1]` and is the
/// counterclockwise quarter turn of the global normal.
#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub normal: Vec2,
    pub tangent: Vec2,
    /// Incident cells (one for boundary edges, two for interior ones).
    pub cells: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.len() == 1
    }
}

/// Reference from a cell to one of its edges.
#[derive(Debug, Clone, Copy)]
pub struct CellEdge {
    pub edge: usize,
    /// True when the cell traverses the edge along its global orientation.
    pub forward: bool,
}

/// Polygonal cell as a counterclockwise vertex cycle.
///
/// `edges[i]` connects `vertices[i]` to `vertices[(i + 1) % m]`.
#[derive(Debug, Clone)]
pub struct Cell {
    pub vertices: Vec<usize>,
    pub edges: Vec<CellEdge>,
}

impl Cell {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
}

/// Conforming polygonal decomposition of the unit square.
#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    vertices: Vec<Point>,
    edges: Vec<Edge>,
    cells: Vec<Cell>,
    vertex_sides: Vec<SideSet>,
    edge_side: Vec<Option<Side>>,
}

impl PolygonalMesh {
    /// Builds a mesh from vertex coordinates and per-cell counterclockwise
    /// vertex cycles. Edges, orientations and boundary tags are derived.
    pub fn from_cells(vertices: Vec<Point>, cell_vertices: Vec<Vec<usize>>) -> Result<Self> {
        let nv = vertices.len();
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_lookup: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut cells = Vec::with_capacity(cell_vertices.len());

        for (ci, cycle) in cell_vertices.iter().enumerate() {
            if cycle.len() < 3 {
                return Err(Error::MeshStructure(format!(
                    "cell {ci} has fewer than 3 vertices"
                )));
            }
            let mut seen = cycle.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != cycle.len() {
                return Err(Error::MeshStructure(format!(
                    "cell {ci} repeats a vertex in its cycle"
                )));
            }
            let mut cell_edges = Vec::with_capacity(cycle.len());
            for (k, &a) in cycle.iter().enumerate() {
                let b = cycle[(k + 1) % cycle.len()];
                if a >= nv || b >= nv {
                    return Err(Error::MeshStructure(format!(
                        "cell {ci} references vertex {} out of range",
                        a.max(b)
                    )));
                }
                let key = (a.min(b), a.max(b));
                let eid = match edge_lookup.get(&key) {
                    Some(&eid) => {
                        edges[eid].cells.push(ci);
                        eid
                    }
                    None => {
                        let (v0, v1) = key;
                        let d = vertices[v1] - vertices[v0];
                        let len = d.norm();
                        if len == 0.0 {
                            return Err(Error::MeshStructure(format!(
                                "edge ({v0}, {v1}) of cell {ci} has zero length"
                            )));
                        }
                        let tangent = d / len;
                        // tangent is the ccw quarter turn of the normal
                        let normal = Vec2::new(tangent.y, -tangent.x);
                        let eid = edges.len();
                        edges.push(Edge {
                            vertices: [v0, v1],
                            normal,
                            tangent,
                            cells: vec![ci],
                        });
                        edge_lookup.insert(key, eid);
                        eid
                    }
                };
                cell_edges.push(CellEdge {
                    edge: eid,
                    forward: edges[eid].vertices[0] == a,
                });
            }
            cells.push(Cell {
                vertices: cycle.clone(),
                edges: cell_edges,
            });
        }

        for (eid, edge) in edges.iter().enumerate() {
            if edge.cells.len() > 2 {
                return Err(Error::MeshStructure(format!(
                    "edge {eid} is shared by {} cells",
                    edge.cells.len()
                )));
            }
        }

        // Boundary tags from geometry.
        let mut vertex_sides = vec![SideSet::default(); nv];
        let mut edge_side = vec![None; edges.len()];
        for (eid, edge) in edges.iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let [a, b] = edge.vertices;
            for side in Side::ALL {
                if side.contains(&vertices[a]) && side.contains(&vertices[b]) {
                    edge_side[eid] = Some(side);
                    vertex_sides[a].insert(side);
                    vertex_sides[b].insert(side);
                    break;
                }
            }
        }

        Ok(PolygonalMesh {
            vertices,
            edges,
            cells,
            vertex_sides,
            edge_side,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell(&self, c: usize) -> &Cell {
        &self.cells[c]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[b] - self.vertices[a]).norm()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        !self.vertex_sides[v].is_empty()
    }

    pub fn vertex_sides(&self, v: usize) -> SideSet {
        self.vertex_sides[v]
    }

    pub fn edge_boundary_side(&self, e: usize) -> Option<Side> {
        self.edge_side[e]
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.cells.len())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    fn cell_diameter(&self, c: usize) -> f64 {
        let vs = &self.cells[c].vertices;
        let mut d = 0.0f64;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                d = d.max((self.vertices[vs[i]] - self.vertices[vs[j]]).norm());
            }
        }
        d
    }

    /// Full geometric description of one cell.
    pub fn cell_geometry(&self, c: usize) -> Result<CellGeometry> {
        let cell = &self.cells[c];
        let m = cell.num_vertices();
        let pts: Vec<Point> = cell.vertices.iter().map(|&v| self.vertices[v]).collect();

        let mut area2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..m {
            let p = pts[i];
            let q = pts[(i + 1) % m];
            let cross = p.x * q.y - q.x * p.y;
            area2 += cross;
            cx += (p.x + q.x) * cross;
            cy += (p.y + q.y) * cross;
        }
        let area = 0.5 * area2;
        let diameter = self.cell_diameter(c);
        if !(area > 1e-12 * diameter * diameter) {
            return Err(Error::DegenerateCell {
                cell: c,
                area,
                diameter,
            });
        }
        let barycenter = Point::new(cx / (3.0 * area2), cy / (3.0 * area2));

        let centered: Vec<Vec2> = pts.iter().map(|p| p - barycenter).collect();
        let mut edge_len = Vec::with_capacity(m);
        let mut tangent = Vec::with_capacity(m);
        let mut outward_normal = Vec::with_capacity(m);
        for i in 0..m {
            let d = pts[(i + 1) % m] - pts[i];
            let len = d.norm();
            let t = d / len;
            edge_len.push(len);
            tangent.push(t);
            // ccw cell: rotating the forward tangent clockwise points outward
            outward_normal.push(Vec2::new(t.y, -t.x));
        }

        Ok(CellGeometry {
            cell: c,
            area,
            diameter,
            barycenter,
            centered,
            edge_len,
            tangent,
            outward_normal,
        })
    }

    /// Validates conformity, orientation, degeneracy and boundary tagging.
    /// Report-only: violations are collected, not raised.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            violations: Vec::new(),
            min_edge_diameter_ratio: f64::INFINITY,
            min_area_ratio: f64::INFINITY,
        };

        for (ci, cell) in self.cells.iter().enumerate() {
            let m = cell.num_vertices();
            let pts: Vec<Point> = cell.vertices.iter().map(|&v| self.vertices[v]).collect();
            let mut area2 = 0.0;
            for i in 0..m {
                let p = pts[i];
                let q = pts[(i + 1) % m];
                area2 += p.x * q.y - q.x * p.y;
            }
            let area = 0.5 * area2;
            let diameter = self.cell_diameter(ci);
            if area <= 0.0 {
                report.violations.push(Violation::NonCcwCell { cell: ci });
                continue;
            }
            if area <= 1e-12 * diameter * diameter {
                report.violations.push(Violation::DegenerateCell { cell: ci });
            }
            report.min_area_ratio = report.min_area_ratio.min(area / (diameter * diameter));
            for (k, ce) in cell.edges.iter().enumerate() {
                let len = self.edge_length(ce.edge);
                report.min_edge_diameter_ratio =
                    report.min_edge_diameter_ratio.min(len / diameter);
                // per-cell tangent must run vertices[k] -> vertices[k+1]
                let a = cell.vertices[k];
                let fwd = self.edges[ce.edge].vertices[0] == a;
                if fwd != ce.forward {
                    report
                        .violations
                        .push(Violation::InconsistentCellEdge { cell: ci, edge: ce.edge });
                }
            }
        }

        for (eid, edge) in self.edges.iter().enumerate() {
            if self.edge_length(eid) == 0.0 {
                report.violations.push(Violation::DegenerateEdge { edge: eid });
            }
            match edge.cells.len() {
                1 => {
                    if self.edge_side[eid].is_none() {
                        report
                            .violations
                            .push(Violation::UntaggedBoundaryEdge { edge: eid });
                    }
                }
                2 => {
                    // the two incident cells must traverse it in opposite directions
                    let dirs: Vec<bool> = edge
                        .cells
                        .iter()
                        .map(|&c| {
                            self.cells[c]
                                .edges
                                .iter()
                                .zip(&self.cells[c].vertices)
                                .find(|(ce, _)| ce.edge == eid)
                                .map(|(_, &v0)| edge.vertices[0] == v0)
                                .unwrap_or(true)
                        })
                        .collect();
                    if dirs[0] == dirs[1] {
                        report
                            .violations
                            .push(Violation::SameDirectionSharedEdge { edge: eid });
                    }
                }
                n => {
                    report
                        .violations
                        .push(Violation::OversharedEdge { edge: eid, cells: n });
                }
            }
        }

        for (vid, sides) in self.vertex_sides.iter().enumerate() {
            let on_boundary_edge = self
                .edges
                .iter()
                .any(|e| e.is_boundary() && e.vertices.contains(&vid));
            if on_boundary_edge && sides.is_empty() {
                report
                    .violations
                    .push(Violation::UntaggedBoundaryVertex { vertex: vid });
            }
        }

        self.detect_hanging_vertices(&mut report);
        report
    }

    /// T-junction scan: a vertex lying strictly inside another cell's edge
    /// breaks conformity. Edges are bucketed on a uniform grid so the scan
    /// stays near-linear.
    fn detect_hanging_vertices(&self, report: &mut ValidationReport) {
        if self.edges.is_empty() {
            return;
        }
        let h = self.mesh_size().max(1e-6);
        let nbuckets = ((1.0 / h).ceil() as usize).clamp(1, 4096);
        let bucket_of = |p: &Point| -> (usize, usize) {
            let bx = ((p.x * nbuckets as f64).floor() as isize).clamp(0, nbuckets as isize - 1);
            let by = ((p.y * nbuckets as f64).floor() as isize).clamp(0, nbuckets as isize - 1);
            (bx as usize, by as usize)
        };
        let mut grid: std::collections::HashMap<(usize, usize), Vec<usize>> =
            std::collections::HashMap::new();
        for (eid, edge) in self.edges.iter().enumerate() {
            let a = self.vertices[edge.vertices[0]];
            let b = self.vertices[edge.vertices[1]];
            let (ax, ay) = bucket_of(&a);
            let (bx, by) = bucket_of(&b);
            for gx in ax.min(bx)..=ax.max(bx) {
                for gy in ay.min(by)..=ay.max(by) {
                    grid.entry((gx, gy)).or_default().push(eid);
                }
            }
        }
        let tol = 1e-10 * h;
        for (vid, p) in self.vertices.iter().enumerate() {
            let (gx, gy) = bucket_of(p);
            let mut candidates: Vec<usize> = Vec::new();
            for dx in -1isize..=1 {
                for dy in -1isize..=1 {
                    let k = (
                        (gx as isize + dx).clamp(0, nbuckets as isize - 1) as usize,
                        (gy as isize + dy).clamp(0, nbuckets as isize - 1) as usize,
                    );
                    if let Some(v) = grid.get(&k) {
                        candidates.extend_from_slice(v);
                    }
                }
            }
            candidates.sort_unstable();
            candidates.dedup();
            for eid in candidates {
                let edge = &self.edges[eid];
                if edge.vertices.contains(&vid) {
                    continue;
                }
                let a = self.vertices[edge.vertices[0]];
                let b = self.vertices[edge.vertices[1]];
                let ab = b - a;
                let len2 = ab.norm_squared();
                let s = (p - a).dot(&ab) / len2;
                if s <= 1e-9 || s >= 1.0 - 1e-9 {
                    continue;
                }
                let foot = a + ab * s;
                if (p - foot).norm() < tol {
                    report
                        .violations
                        .push(Violation::HangingVertex { vertex: vid, edge: eid });
                }
            }
        }
    }
}

/// Per-cell geometric quantities used by the local constructions.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub cell: usize,
    pub area: f64,
    pub diameter: f64,
    pub barycenter: Point,
    /// Vertex coordinates relative to the barycenter, cell order.
    pub centered: Vec<Vec2>,
    pub edge_len: Vec<f64>,
    /// Unit tangent of edge i, pointing from local vertex i to i+1.
    pub tangent: Vec<Vec2>,
    /// Unit outward normal of edge i.
    pub outward_normal: Vec<Vec2>,
}

impl CellGeometry {
    pub fn num_vertices(&self) -> usize {
        self.centered.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonCcwCell { cell: usize },
    DegenerateCell { cell: usize },
    DegenerateEdge { edge: usize },
    OversharedEdge { edge: usize, cells: usize },
    SameDirectionSharedEdge { edge: usize },
    InconsistentCellEdge { cell: usize, edge: usize },
    HangingVertex { vertex: usize, edge: usize },
    UntaggedBoundaryVertex { vertex: usize },
    UntaggedBoundaryEdge { edge: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonCcwCell { cell } => write!(f, "cell {cell} is not counterclockwise"),
            Violation::DegenerateCell { cell } => write!(f, "cell {cell} is degenerate"),
            Violation::DegenerateEdge { edge } => write!(f, "edge {edge} has zero length"),
            Violation::OversharedEdge { edge, cells } => {
                write!(f, "edge {edge} is shared by {cells} cells")
            }
            Violation::SameDirectionSharedEdge { edge } => {
                write!(f, "edge {edge} is traversed twice in the same direction")
            }
            Violation::InconsistentCellEdge { cell, edge } => {
                write!(f, "cell {cell} stores edge {edge} with the wrong direction flag")
            }
            Violation::HangingVertex { vertex, edge } => {
                write!(f, "vertex {vertex} lies inside edge {edge} (T-junction)")
            }
            Violation::UntaggedBoundaryVertex { vertex } => {
                write!(f, "boundary vertex {vertex} lies on no side of the unit square")
            }
            Violation::UntaggedBoundaryEdge { edge } => {
                write!(f, "boundary edge {edge} lies on no side of the unit square")
            }
        }
    }
}

/// Outcome of [`PolygonalMesh::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// min over cells of (shortest edge / cell diameter)
    pub min_edge_diameter_ratio: f64,
    /// min over cells of (area / diameter^2)
    pub min_area_ratio: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.is_valid() {
            format!(
                "valid (min |e|/h_E = {:.4}, min |E|/h_E^2 = {:.4})",
                self.min_edge_diameter_ratio, self.min_area_ratio
            )
        } else {
            let head: Vec<String> = self.violations.iter().take(5).map(|v| v.to_string()).collect();
            format!("{} violations: {}", self.violations.len(), head.join("; "))
        }
    }
}

//! Built-in mesh families of the unit square.
//!
//! The refinement parameter `n` counts elements along each side of the plate.
//! All generators are pure functions of `(family, n, seed)`.
//!
//! - `T1`: right triangles; each of the n x n subsquares is split by the same
//!   diagonal.
//! - `T2`: structured hexagons in a staggered brick pattern; boundary rows are
//!   clipped to pentagons and quads.
//! - `T3`: unstructured convex cells from a Lloyd-relaxed Voronoi diagram of
//!   jittered seed points (requires a seed).
//! - `T4`: n x n squares.
//! - `T5`: congruent trapezoids, all similar to the one with corners
//!   (0,0), (1/2,0), (1/2,2/3), (0,1/3); needs even n.
//! - `T6`: `T1` with every edge midpoint inserted as a vertex, so each cell
//!   has six edges.
//! - `T7`: `T6` with randomly displaced midpoints (requires a seed); cells may
//!   be non-convex.

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::{Point, Vec2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 7] = [
        MeshFamily::T1,
        MeshFamily::T2,
        MeshFamily::T3,
        MeshFamily::T4,
        MeshFamily::T5,
        MeshFamily::T6,
        MeshFamily::T7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::T1 => "T1",
            MeshFamily::T2 => "T2",
            MeshFamily::T3 => "T3",
            MeshFamily::T4 => "T4",
            MeshFamily::T5 => "T5",
            MeshFamily::T6 => "T6",
            MeshFamily::T7 => "T7",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, MeshFamily::T3 | MeshFamily::T7)
    }
}

impl std::str::FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Ok(MeshFamily::T1),
            "T2" => Ok(MeshFamily::T2),
            "T3" => Ok(MeshFamily::T3),
            "T4" => Ok(MeshFamily::T4),
            "T5" => Ok(MeshFamily::T5),
            "T6" => Ok(MeshFamily::T6),
            "T7" => Ok(MeshFamily::T7),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

impl std::fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Generates one of the built-in families on the unit square.
pub fn generate_mesh(family: MeshFamily, n: usize, seed: Option<u64>) -> Result<PolygonalMesh> {
    if n < 2 {
        return Err(Error::SubdivisionTooSmall(n));
    }
    if family.is_randomized() && seed.is_none() {
        return Err(Error::SeedRequired {
            family: family.name(),
        });
    }
    match family {
        MeshFamily::T1 => triangles(n),
        MeshFamily::T2 => structured_hexagons(n),
        MeshFamily::T3 => voronoi_cells(n, seed.unwrap()),
        MeshFamily::T4 => squares(n),
        MeshFamily::T5 => trapezoids(n),
        MeshFamily::T6 => midpoint_hexagons(n),
        MeshFamily::T7 => perturbed_midpoint_hexagons(n, seed.unwrap()),
    }
}

fn grid_vertices(n: usize) -> Vec<Point> {
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    vertices
}

fn squares(n: usize) -> Result<PolygonalMesh> {
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    PolygonalMesh::from_cells(grid_vertices(n), cells)
}

fn triangles(n: usize) -> Result<PolygonalMesh> {
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            // split along the diagonal from (i, j) to (i+1, j+1)
            cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            cells.push(vec![vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    PolygonalMesh::from_cells(grid_vertices(n), cells)
}

fn trapezoids(n: usize) -> Result<PolygonalMesh> {
    if n % 2 != 0 {
        return Err(Error::OddSubdivision { family: "T5", n });
    }
    let nf = n as f64;
    // Column lines x = i/n; on each line the interior cut heights alternate
    // around k/n by 1/(3n), with the offset sign flipping between columns.
    // Both cell heights in a vertical period are then 2/(3n) and 4/(3n), which
    // keeps every cell similar to the reference trapezoid.
    let y_of = |i: usize, k: usize| -> f64 {
        if k == 0 {
            0.0
        } else if k == n {
            1.0
        } else if k % 2 == 1 {
            let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
            k as f64 / nf + sign / (3.0 * nf)
        } else {
            k as f64 / nf
        }
    };
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for k in 0..=n {
        for i in 0..=n {
            vertices.push(Point::new(i as f64 / nf, y_of(i, k)));
        }
    }
    let vid = |i: usize, k: usize| k * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for k in 0..n {
        for i in 0..n {
            cells.push(vec![vid(i, k), vid(i + 1, k), vid(i + 1, k + 1), vid(i, k + 1)]);
        }
    }
    PolygonalMesh::from_cells(vertices, cells)
}

/// Integer lattice used by the hexagonal tiling: x in units of 1/(2n),
/// y in units of 1/(3n). Every vertex of the clipped tiling sits on this
/// lattice, so shared vertices match exactly.
fn structured_hexagons(n: usize) -> Result<PolygonalMesh> {
    let xmax = 2 * n as i64;
    let ymax = 3 * n as i64;

    let hexagon = |xc: i64, yc: i64| -> Vec<(i64, i64)> {
        vec![
            (xc - 1, yc - 1),
            (xc, yc - 2),
            (xc + 1, yc - 1),
            (xc + 1, yc + 1),
            (xc, yc + 2),
            (xc - 1, yc + 1),
        ]
    };

    let mut raw_cells: Vec<Vec<(i64, i64)>> = Vec::new();
    for j in 0..=(n as i64) {
        let yc = 3 * j;
        let centers: Vec<i64> = if j % 2 == 0 {
            (0..n as i64).map(|i| 2 * i + 1).collect()
        } else {
            (0..=n as i64).map(|i| 2 * i).collect()
        };
        for xc in centers {
            let clipped = clip_lattice_polygon(hexagon(xc, yc), xmax, ymax);
            if clipped.len() >= 3 {
                raw_cells.push(clipped);
            }
        }
    }

    lattice_cells_to_mesh(raw_cells, 1.0 / (2.0 * n as f64), 1.0 / (3.0 * n as f64))
}

/// Sutherland-Hodgman clip of a lattice polygon against the rectangle
/// [0, xmax] x [0, ymax]. For the hexagon shapes used here every crossing
/// lands back on the lattice; the arithmetic below is exact in f64.
fn clip_lattice_polygon(poly: Vec<(i64, i64)>, xmax: i64, ymax: i64) -> Vec<(i64, i64)> {
    let planes: [(f64, f64, f64); 4] = [
        (1.0, 0.0, 0.0),              // x >= 0
        (-1.0, 0.0, xmax as f64),     // x <= xmax
        (0.0, 1.0, 0.0),              // y >= 0
        (0.0, -1.0, ymax as f64),     // y <= ymax
    ];
    let mut current: Vec<(f64, f64)> =
        poly.into_iter().map(|(x, y)| (x as f64, y as f64)).collect();
    for (a, b, c) in planes {
        let inside = |p: &(f64, f64)| a * p.0 + b * p.1 + c >= 0.0;
        let mut next = Vec::with_capacity(current.len() + 2);
        for i in 0..current.len() {
            let p = current[i];
            let q = current[(i + 1) % current.len()];
            let pin = inside(&p);
            let qin = inside(&q);
            if pin {
                next.push(p);
            }
            if pin != qin {
                let fp = a * p.0 + b * p.1 + c;
                let fq = a * q.0 + b * q.1 + c;
                let s = fp / (fp - fq);
                next.push((p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1)));
            }
        }
        current = next;
        if current.is_empty() {
            return Vec::new();
        }
    }
    let mut out: Vec<(i64, i64)> = current
        .into_iter()
        .map(|(x, y)| (x.round() as i64, y.round() as i64))
        .collect();
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

fn lattice_cells_to_mesh(
    raw_cells: Vec<Vec<(i64, i64)>>,
    x_unit: f64,
    y_unit: f64,
) -> Result<PolygonalMesh> {
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut cells = Vec::with_capacity(raw_cells.len());
    for raw in raw_cells {
        let mut cycle = Vec::with_capacity(raw.len());
        for key in raw {
            let id = *index.entry(key).or_insert_with(|| {
                vertices.push(Point::new(key.0 as f64 * x_unit, key.1 as f64 * y_unit));
                vertices.len() - 1
            });
            cycle.push(id);
        }
        cells.push(cycle);
    }
    PolygonalMesh::from_cells(vertices, cells)
}

/// T1 vertices plus one midpoint per T1 edge; each triangle becomes a
/// six-edge cell.
fn midpoint_refined_triangles(n: usize) -> (Vec<Point>, Vec<Vec<usize>>, Vec<MidpointInfo>) {
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = grid_vertices(n);
    let mut tri_cells: Vec<[usize; 3]> = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            tri_cells.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            tri_cells.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut info: Vec<MidpointInfo> = Vec::new();
    let mut cells = Vec::with_capacity(tri_cells.len());
    for tri in &tri_cells {
        let mut cycle = Vec::with_capacity(6);
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            let mid = *midpoint.entry(key).or_insert_with(|| {
                let pa = vertices[a];
                let pb = vertices[b];
                let p = Point::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y));
                vertices.push(p);
                info.push(MidpointInfo {
                    vertex: vertices.len() - 1,
                    ends: [a, b],
                });
                vertices.len() - 1
            });
            cycle.push(a);
            cycle.push(mid);
        }
        cells.push(cycle);
    }
    (vertices, cells, info)
}

struct MidpointInfo {
    vertex: usize,
    ends: [usize; 2],
}

fn midpoint_hexagons(n: usize) -> Result<PolygonalMesh> {
    let (vertices, cells, _) = midpoint_refined_triangles(n);
    PolygonalMesh::from_cells(vertices, cells)
}

fn perturbed_midpoint_hexagons(n: usize, seed: u64) -> Result<PolygonalMesh> {
    const MAX_RETRIES: usize = 6;
    let (base_vertices, cells, midpoints) = midpoint_refined_triangles(n);
    let mut amplitude = 0.2;
    for retry in 0..MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(retry as u64));
        let mut vertices = base_vertices.clone();
        for info in &midpoints {
            let pa = base_vertices[info.ends[0]];
            let pb = base_vertices[info.ends[1]];
            let edge = pb - pa;
            let len = edge.norm();
            let t = edge / len;
            let nrm = Vec2::new(t.y, -t.x);
            let u: f64 = rng.gen_range(-1.0..1.0);
            let v: f64 = rng.gen_range(-1.0..1.0);
            let p = &mut vertices[info.vertex];
            let on_boundary = is_on_unit_square_boundary(&base_vertices[info.vertex]);
            let mut disp = t * (u * amplitude * len);
            if !on_boundary {
                disp += nrm * (v * amplitude * len);
            }
            *p += disp;
        }
        if cells_are_valid(&vertices, &cells) {
            return PolygonalMesh::from_cells(vertices, cells);
        }
        amplitude *= 0.5;
    }
    Err(Error::TangledMesh {
        retries: MAX_RETRIES,
    })
}

fn is_on_unit_square_boundary(p: &Point) -> bool {
    p.x.abs() <= 1e-12 || (p.x - 1.0).abs() <= 1e-12 || p.y.abs() <= 1e-12 || (p.y - 1.0).abs() <= 1e-12
}

/// Positive area and simple (non-self-intersecting) check for every cell.
fn cells_are_valid(vertices: &[Point], cells: &[Vec<usize>]) -> bool {
    for cycle in cells {
        let m = cycle.len();
        let pts: Vec<Point> = cycle.iter().map(|&v| vertices[v]).collect();
        let mut area2 = 0.0;
        let mut diam: f64 = 0.0;
        for i in 0..m {
            let p = pts[i];
            let q = pts[(i + 1) % m];
            area2 += p.x * q.y - q.x * p.y;
            for j in i + 1..m {
                diam = diam.max((pts[j] - p).norm());
            }
        }
        if area2 <= 2e-10 * diam * diam {
            return false;
        }
        for i in 0..m {
            for j in i + 1..m {
                // skip segments sharing an endpoint
                if j == i + 1 || (i == 0 && j == m - 1) {
                    continue;
                }
                if segments_properly_intersect(
                    pts[i],
                    pts[(i + 1) % m],
                    pts[j],
                    pts[(j + 1) % m],
                ) {
                    return false;
                }
            }
        }
    }
    true
}

fn segments_properly_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let cross = |o: Point, p: Point, q: Point| (p.x - o.x) * (q.y - o.y) - (q.x - o.x) * (p.y - o.y);
    let d1 = cross(a, b, c);
    let d2 = cross(a, b, d);
    let d3 = cross(c, d, a);
    let d4 = cross(c, d, b);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

// ---------------------------------------------------------------------------
// Lloyd-relaxed Voronoi family (T3)
// ---------------------------------------------------------------------------

const LLOYD_ITERATIONS: usize = 30;

fn voronoi_cells(n: usize, seed: u64) -> Result<PolygonalMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let mut seeds: Vec<Point> = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let jx: f64 = rng.gen_range(-0.25..0.25);
            let jy: f64 = rng.gen_range(-0.25..0.25);
            seeds.push(Point::new(
                ((i as f64 + 0.5) + jx) / nf,
                ((j as f64 + 0.5) + jy) / nf,
            ));
        }
    }

    for _ in 0..LLOYD_ITERATIONS {
        let cells = clipped_voronoi(&seeds, n);
        for (s, cell) in seeds.iter_mut().zip(&cells) {
            if let Some(c) = polygon_centroid(cell) {
                *s = c;
            }
        }
    }

    let cells = clipped_voronoi(&seeds, n);
    let mesh = weld_polygons(&cells, 1e-9, 1e-4 / nf)?;
    let report = mesh.validate();
    if !report.is_valid() {
        return Err(Error::MeshValidation(report.summary()));
    }
    Ok(mesh)
}

/// Voronoi cells clipped to the unit square, one convex polygon per seed.
/// Bisector candidates come from a uniform bucket grid; the expanding ring
/// search stops once no remaining seed can still cut the current polygon.
fn clipped_voronoi(seeds: &[Point], n: usize) -> Vec<Vec<Point>> {
    let nb = n.max(1);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nb * nb];
    let bucket_of = |p: &Point| -> (usize, usize) {
        let bx = ((p.x * nb as f64) as isize).clamp(0, nb as isize - 1) as usize;
        let by = ((p.y * nb as f64) as isize).clamp(0, nb as isize - 1) as usize;
        (bx, by)
    };
    for (i, s) in seeds.iter().enumerate() {
        let (bx, by) = bucket_of(s);
        buckets[by * nb + bx].push(i);
    }
    let bucket_size = 1.0 / nb as f64;

    seeds
        .iter()
        .enumerate()
        .map(|(i, si)| {
            let mut poly = vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ];
            let (bx, by) = bucket_of(si);
            let mut ring = 0usize;
            loop {
                let mut max_r2: f64 = 0.0;
                for p in &poly {
                    max_r2 = max_r2.max((p - si).norm_squared());
                }
                let ring_min_dist = (ring as f64 - 1.0).max(0.0) * bucket_size;
                if ring > 0 && ring_min_dist * ring_min_dist > 4.0 * max_r2 {
                    break;
                }
                if ring > 2 * nb {
                    break;
                }
                for j in ring_bucket_indices(bx, by, ring, nb) {
                    for &k in &buckets[j] {
                        if k == i {
                            continue;
                        }
                        clip_by_bisector(&mut poly, si, &seeds[k]);
                    }
                }
                if poly.is_empty() {
                    break;
                }
                ring += 1;
            }
            poly
        })
        .collect()
}

fn ring_bucket_indices(bx: usize, by: usize, ring: usize, nb: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let r = ring as isize;
    let (bx, by) = (bx as isize, by as isize);
    let mut push = |x: isize, y: isize| {
        if x >= 0 && y >= 0 && (x as usize) < nb && (y as usize) < nb {
            out.push(y as usize * nb + x as usize);
        }
    };
    if ring == 0 {
        push(bx, by);
        return out;
    }
    for x in bx - r..=bx + r {
        push(x, by - r);
        push(x, by + r);
    }
    for y in by - r + 1..=by + r - 1 {
        push(bx - r, y);
        push(bx + r, y);
    }
    out
}

/// Keeps the half-plane of points closer to `s` than to `t`.
fn clip_by_bisector(poly: &mut Vec<Point>, s: &Point, t: &Point) {
    if poly.is_empty() {
        return;
    }
    let d = t - s;
    let mid = Point::new(0.5 * (s.x + t.x), 0.5 * (s.y + t.y));
    // inside: d . (p - mid) <= 0
    let f = |p: &Point| d.dot(&(p - mid));
    let mut next: Vec<Point> = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let fp = f(&p);
        let fq = f(&q);
        if fp <= 0.0 {
            next.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let s01 = fp / (fp - fq);
            next.push(Point::new(p.x + s01 * (q.x - p.x), p.y + s01 * (q.y - p.y)));
        }
    }
    *poly = next;
}

fn polygon_centroid(poly: &[Point]) -> Option<Point> {
    if poly.len() < 3 {
        return None;
    }
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let cross = p.x * q.y - q.x * p.y;
        area2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    if area2.abs() < 1e-300 {
        return None;
    }
    Some(Point::new(cx / (3.0 * area2), cy / (3.0 * area2)))
}

/// Merges per-cell polygon corners into a shared vertex set (tolerance
/// `weld_tol`), then collapses edges shorter than `collapse_tol`.
fn weld_polygons(cells: &[Vec<Point>], weld_tol: f64, collapse_tol: f64) -> Result<PolygonalMesh> {
    // spatial hash clustering
    let inv = 1.0 / weld_tol.max(1e-300);
    let mut clusters: HashMap<(i64, i64), usize> = HashMap::new();
    let mut reps: Vec<Point> = Vec::new();
    let mut cycles: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
    for poly in cells {
        let mut cycle = Vec::with_capacity(poly.len());
        for p in poly {
            let kx = (p.x * inv).round() as i64;
            let ky = (p.y * inv).round() as i64;
            let mut found = None;
            'search: for dx in -1..=1i64 {
                for dy in -1..=1i64 {
                    if let Some(&id) = clusters.get(&(kx + dx, ky + dy)) {
                        if (reps[id] - p).norm() <= 2.0 * weld_tol {
                            found = Some(id);
                            break 'search;
                        }
                    }
                }
            }
            let id = found.unwrap_or_else(|| {
                reps.push(*p);
                clusters.insert((kx, ky), reps.len() - 1);
                reps.len() - 1
            });
            cycle.push(id);
        }
        cycle.dedup();
        if cycle.len() > 1 && cycle.first() == cycle.last() {
            cycle.pop();
        }
        cycles.push(cycle);
    }

    // union-find collapse of short edges
    let mut parent: Vec<usize> = (0..reps.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for cycle in &cycles {
        for k in 0..cycle.len() {
            let a = cycle[k];
            let b = cycle[(k + 1) % cycle.len()];
            if (reps[a] - reps[b]).norm() < collapse_tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    // keep boundary points pinned
                    let a_bnd = is_on_unit_square_boundary(&reps[ra]);
                    let b_bnd = is_on_unit_square_boundary(&reps[rb]);
                    let pos = if a_bnd && !b_bnd {
                        reps[ra]
                    } else if b_bnd && !a_bnd {
                        reps[rb]
                    } else {
                        Point::new(
                            0.5 * (reps[ra].x + reps[rb].x),
                            0.5 * (reps[ra].y + reps[rb].y),
                        )
                    };
                    parent[rb] = ra;
                    reps[ra] = pos;
                }
            }
        }
    }

    // compact representatives
    let mut remap: Vec<Option<usize>> = vec![None; reps.len()];
    let mut vertices: Vec<Point> = Vec::new();
    let mut final_cells: Vec<Vec<usize>> = Vec::with_capacity(cycles.len());
    for cycle in &cycles {
        let mut out = Vec::with_capacity(cycle.len());
        for &raw in cycle {
            let root = find(&mut parent, raw);
            let id = match remap[root] {
                Some(id) => id,
                None => {
                    vertices.push(reps[root]);
                    remap[root] = Some(vertices.len() - 1);
                    vertices.len() - 1
                }
            };
            if out.last() != Some(&id) {
                out.push(id);
            }
        }
        while out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        if out.len() >= 3 {
            final_cells.push(out);
        }
    }
    PolygonalMesh::from_cells(vertices, final_cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t4_counts() {
        let mesh = generate_mesh(MeshFamily::T4, 4, None).unwrap();
        assert_eq!(mesh.num_cells(), 16);
        assert_eq!(mesh.num_vertices(), 25);
        assert_eq!(mesh.num_edges(), 40);
    }

    #[test]
    fn t5_cells_similar_to_reference_trapezoid() {
        let mesh = generate_mesh(MeshFamily::T5, 2, None).unwrap();
        assert_eq!(mesh.num_cells(), 4);
        // reference edge lengths, sorted
        let mut reference = [
            0.5f64,
            2.0 / 3.0,
            (0.25f64 + 1.0 / 9.0).sqrt(),
            1.0 / 3.0,
        ];
        reference.sort_by(f64::total_cmp);
        for c in 0..mesh.num_cells() {
            let g = mesh.cell_geometry(c).unwrap();
            let mut lens = g.edge_len.clone();
            lens.sort_by(f64::total_cmp);
            let scale = lens[0] / reference[0];
            for (l, r) in lens.iter().zip(reference.iter()) {
                assert!((l - scale * r).abs() < 1e-12, "cell {c} not similar");
            }
        }
    }

    #[test]
    fn t5_first_cell_is_reference() {
        let mesh = generate_mesh(MeshFamily::T5, 2, None).unwrap();
        let cell = mesh.cell(0);
        let expect = [
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(0.5, 2.0 / 3.0),
            Point::new(0.0, 1.0 / 3.0),
        ];
        for (&v, e) in cell.vertices.iter().zip(expect.iter()) {
            assert!((mesh.vertex(v) - e).norm() < 1e-15);
        }
    }

    #[test]
    fn t5_rejects_odd_n() {
        assert!(matches!(
            generate_mesh(MeshFamily::T5, 3, None),
            Err(Error::OddSubdivision { .. })
        ));
    }

    #[test]
    fn t6_cells_have_six_edges() {
        let mesh = generate_mesh(MeshFamily::T6, 4, None).unwrap();
        for cell in mesh.cells() {
            assert_eq!(cell.num_vertices(), 6);
        }
    }

    #[test]
    fn t2_interior_cells_are_hexagons() {
        let mesh = generate_mesh(MeshFamily::T2, 4, None).unwrap();
        let mut seen_hex = false;
        for cell in mesh.cells() {
            let all_interior = cell
                .vertices
                .iter()
                .all(|&v| !mesh.is_boundary_vertex(v));
            let touches_boundary = cell.edges.iter().any(|ce| mesh.edge(ce.edge).is_boundary());
            if !touches_boundary && all_interior {
                assert_eq!(cell.num_vertices(), 6);
                seen_hex = true;
            }
        }
        assert!(seen_hex);
    }

    #[test]
    fn all_families_validate() {
        for family in MeshFamily::ALL {
            for n in [2usize, 4, 8, 16] {
                if family == MeshFamily::T5 && n % 2 != 0 {
                    continue;
                }
                let seed = family.is_randomized().then_some(1);
                let mesh = generate_mesh(family, n, seed).unwrap();
                let report = mesh.validate();
                assert!(
                    report.is_valid(),
                    "{family} n={n}: {}",
                    report.summary()
                );
            }
        }
    }

    #[test]
    fn refinement_halves_mesh_size_for_structured_families() {
        for family in [
            MeshFamily::T1,
            MeshFamily::T2,
            MeshFamily::T4,
            MeshFamily::T5,
            MeshFamily::T6,
        ] {
            for n in [2usize, 4, 8] {
                let h1 = generate_mesh(family, n, None).unwrap().mesh_size();
                let h2 = generate_mesh(family, 2 * n, None).unwrap().mesh_size();
                let ratio = h2 / h1;
                assert!(
                    (0.45..=0.55).contains(&ratio),
                    "{family}: h ratio {ratio}"
                );
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for (family, seed) in [(MeshFamily::T3, Some(7u64)), (MeshFamily::T7, Some(3u64))] {
            let a = generate_mesh(family, 8, seed).unwrap();
            let b = generate_mesh(family, 8, seed).unwrap();
            assert_eq!(a.num_vertices(), b.num_vertices());
            assert_eq!(a.num_cells(), b.num_cells());
            for v in 0..a.num_vertices() {
                assert_eq!(a.vertex(v), b.vertex(v));
            }
        }
    }

    #[test]
    fn t7_allows_nonconvex_cells() {
        let mesh = generate_mesh(MeshFamily::T7, 4, Some(1)).unwrap();
        assert!(mesh.validate().is_valid());
        let mut nonconvex = 0;
        for c in 0..mesh.num_cells() {
            let g = mesh.cell_geometry(c).unwrap();
            let m = g.num_vertices();
            for i in 0..m {
                let a = g.centered[i];
                let b = g.centered[(i + 1) % m];
                let c2 = g.centered[(i + 2) % m];
                let cross = (b - a).x * (c2 - b).y - (b - a).y * (c2 - b).x;
                if cross < -1e-12 {
                    nonconvex += 1;
                    break;
                }
            }
        }
        assert!(nonconvex > 0, "expected at least one non-convex cell");
    }

    #[test]
    fn t3_is_mostly_hexagonal_and_convex() {
        let mesh = generate_mesh(MeshFamily::T3, 8, Some(5)).unwrap();
        assert!(mesh.validate().is_valid());
        let mut hex = 0;
        for c in 0..mesh.num_cells() {
            let g = mesh.cell_geometry(c).unwrap();
            let m = g.num_vertices();
            if m == 6 {
                hex += 1;
            }
            for i in 0..m {
                let a = g.centered[i];
                let b = g.centered[(i + 1) % m];
                let c2 = g.centered[(i + 2) % m];
                let cross = (b - a).x * (c2 - b).y - (b - a).y * (c2 - b).x;
                assert!(cross > -1e-9, "voronoi cell {c} should be convex");
            }
        }
        assert!(hex * 2 > mesh.num_cells(), "expected hexagon-dominant mesh");
    }

    #[test]
    fn seed_required_for_randomized_families() {
        assert!(matches!(
            generate_mesh(MeshFamily::T3, 4, None),
            Err(Error::SeedRequired { .. })
        ));
        assert!(matches!(
            generate_mesh(MeshFamily::T7, 4, None),
            Err(Error::SeedRequired { .. })
        ));
    }

    #[test]
    fn n_too_small_is_rejected() {
        assert!(matches!(
            generate_mesh(MeshFamily::T4, 1, None),
            Err(Error::SubdivisionTooSmall(1))
        ));
    }
}

//! Plain-text mesh file format.
//!
//! ```text
//! # mfd-plate mesh 1
//! vertices <count>
//! <index> <x> <y>
//! cells <count>
//! <index> <vertex-count> <v0> <v1> ...
//! boundary
//! side <name> vertices <v0> <v1> ...
//! side <name> edges <a0> <b0> <a1> <b1> ...
//! ```
//!
//! Coordinates are printed with the shortest decimal representation that
//! round-trips, so export followed by import reproduces the mesh bit for bit.
//! Import rebuilds connectivity from the cell cycles, cross-checks the
//! boundary section and re-validates the mesh.

use super::{PolygonalMesh, Side};
use crate::error::{Error, Result};
use crate::Point;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

const HEADER: &str = "# mfd-plate mesh 1";

pub fn write_mesh<W: Write>(mesh: &PolygonalMesh, out: &mut W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "vertices {}", mesh.num_vertices())?;
    for (i, p) in mesh.vertices().iter().enumerate() {
        writeln!(out, "{i} {} {}", p.x, p.y)?;
    }
    writeln!(out, "cells {}", mesh.num_cells())?;
    for (i, cell) in mesh.cells().iter().enumerate() {
        write!(out, "{i} {}", cell.num_vertices())?;
        for v in &cell.vertices {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "boundary")?;
    for side in Side::ALL {
        let verts: Vec<usize> = (0..mesh.num_vertices())
            .filter(|&v| mesh.vertex_sides(v).contains(side))
            .collect();
        write!(out, "side {} vertices", side.name())?;
        for v in verts {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
        write!(out, "side {} edges", side.name())?;
        for (e, edge) in mesh.edges().iter().enumerate() {
            if mesh.edge_boundary_side(e) == Some(side) {
                write!(out, " {} {}", edge.vertices[0], edge.vertices[1])?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn export_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mesh(mesh, &mut file)
}

pub fn read_mesh<R: Read>(input: R) -> Result<PolygonalMesh> {
    let reader = BufReader::new(input);
    let parse_err = |line: usize, msg: String| Error::Parse { line, msg };

    let mut content_lines: Vec<(usize, String)> = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        content_lines.push((no + 1, trimmed.to_string()));
    }
    let mut it = content_lines.into_iter();

    let (no, header) = it
        .next()
        .ok_or_else(|| parse_err(0, "empty mesh file".into()))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("vertices") {
        return Err(parse_err(no, format!("expected `vertices <count>`, got `{header}`")));
    }
    let nv: usize = words
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| parse_err(no, "bad vertex count".into()))?;

    let mut vertices = vec![Point::new(f64::NAN, f64::NAN); nv];
    for _ in 0..nv {
        let (no, line) = it
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of vertex section".into()))?;
        let mut w = line.split_whitespace();
        let idx: usize = w
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(no, "bad vertex index".into()))?;
        let x: f64 = w
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(no, format!("bad x coordinate for vertex {idx}")))?;
        let y: f64 = w
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(no, format!("bad y coordinate for vertex {idx}")))?;
        if idx >= nv {
            return Err(parse_err(no, format!("vertex index {idx} out of range (count {nv})")));
        }
        vertices[idx] = Point::new(x, y);
    }

    let (no, header) = it
        .next()
        .ok_or_else(|| parse_err(0, "missing cells section".into()))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("cells") {
        return Err(parse_err(no, format!("expected `cells <count>`, got `{header}`")));
    }
    let nc: usize = words
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| parse_err(no, "bad cell count".into()))?;

    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for _ in 0..nc {
        let (no, line) = it
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of cell section".into()))?;
        let mut w = line.split_whitespace();
        let idx: usize = w
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(no, "bad cell index".into()))?;
        let count: usize = w
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(no, format!("bad vertex count for cell {idx}")))?;
        if idx >= nc {
            return Err(parse_err(no, format!("cell index {idx} out of range (count {nc})")));
        }
        let mut cycle = Vec::with_capacity(count);
        for k in 0..count {
            let v: usize = w
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(no, format!("cell {idx}: missing vertex {k}")))?;
            if v >= nv {
                return Err(parse_err(
                    no,
                    format!("cell {idx} references vertex {v} out of range"),
                ));
            }
            cycle.push(v);
        }
        cells[idx] = cycle;
    }

    // optional boundary section, cross-checked against derived tags
    let mut declared_edges: Vec<(usize, usize, usize, Side)> = Vec::new();
    if let Some((no, line)) = it.next() {
        if line != "boundary" {
            return Err(parse_err(no, format!("expected `boundary`, got `{line}`")));
        }
        for (no, line) in it {
            let mut w = line.split_whitespace();
            if w.next() != Some("side") {
                return Err(parse_err(no, format!("expected `side ...`, got `{line}`")));
            }
            let name = w
                .next()
                .ok_or_else(|| parse_err(no, "missing side name".into()))?;
            let side = Side::from_name(name)
                .ok_or_else(|| parse_err(no, format!("unknown side `{name}`")))?;
            match w.next() {
                Some("vertices") => {
                    for t in w {
                        let v: usize = t
                            .parse()
                            .map_err(|_| parse_err(no, format!("bad vertex id `{t}`")))?;
                        if v >= nv {
                            return Err(parse_err(
                                no,
                                format!("boundary vertex {v} out of range"),
                            ));
                        }
                    }
                }
                Some("edges") => {
                    let ids: Vec<usize> = w
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|_| parse_err(no, format!("bad edge endpoint `{t}`")))
                        })
                        .collect::<Result<_>>()?;
                    if ids.len() % 2 != 0 {
                        return Err(parse_err(no, "odd number of edge endpoints".into()));
                    }
                    for pair in ids.chunks(2) {
                        if pair[0] >= nv || pair[1] >= nv {
                            return Err(parse_err(
                                no,
                                format!(
                                    "boundary edge ({}, {}) references a vertex out of range",
                                    pair[0], pair[1]
                                ),
                            ));
                        }
                        declared_edges.push((no, pair[0], pair[1], side));
                    }
                }
                other => {
                    return Err(parse_err(
                        no,
                        format!("expected `vertices` or `edges`, got {other:?}"),
                    ))
                }
            }
        }
    }

    let mesh = PolygonalMesh::from_cells(vertices, cells)?;

    for (no, a, b, _side) in &declared_edges {
        let exists = mesh.edges().iter().any(|e| {
            (e.vertices[0] == *a && e.vertices[1] == *b)
                || (e.vertices[0] == *b && e.vertices[1] == *a)
        });
        if !exists {
            return Err(parse_err(
                *no,
                format!("boundary section names edge ({a}, {b}) which is not an edge of any cell"),
            ));
        }
    }

    let report = mesh.validate();
    if !report.is_valid() {
        return Err(Error::MeshValidation(report.summary()));
    }
    Ok(mesh)
}

pub fn import_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh> {
    read_mesh(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily};

    #[test]
    fn roundtrip_is_exact() {
        let mesh = generate_mesh(MeshFamily::T3, 8, Some(7)).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(&buf[..]).unwrap();
        assert_eq!(mesh.num_vertices(), back.num_vertices());
        assert_eq!(mesh.num_cells(), back.num_cells());
        for v in 0..mesh.num_vertices() {
            assert_eq!(mesh.vertex(v), back.vertex(v), "vertex {v} differs");
        }
        for c in 0..mesh.num_cells() {
            assert_eq!(mesh.cell(c).vertices, back.cell(c).vertices);
        }
    }

    #[test]
    fn dangling_edge_reference_is_a_parse_error() {
        let text = "\
vertices 4
0 0 0
1 1 0
2 1 1
3 0 1
cells 1
0 4 0 1 2 3
boundary
side bottom edges 0 9
";
        match read_mesh(text.as_bytes()) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains('9'), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn nonexistent_edge_reference_is_a_parse_error() {
        let text = "\
vertices 4
0 0 0
1 1 0
2 1 1
3 0 1
cells 1
0 4 0 1 2 3
boundary
side bottom edges 0 2
";
        match read_mesh(text.as_bytes()) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("(0, 2)"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn clockwise_cell_fails_validation() {
        let text = "\
vertices 4
0 0 0
1 1 0
2 1 1
3 0 1
cells 1
0 4 0 3 2 1
";
        assert!(matches!(
            read_mesh(text.as_bytes()),
            Err(Error::MeshValidation(_))
        ));
    }
}

//! Plain-text mesh format.
//!
//! ```text
//! nv nt
//! x y boundary_flag      (nv lines, flag 0 or 1)
//! i j k                  (nt lines, 0-based, counter-clockwise)
//! ```
//!
//! Coordinates are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every vertex bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{FvemError, Result};
use crate::geometry::Point;

use super::Mesh;

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_triangles()).unwrap();
    for (p, &b) in mesh.vertices().iter().zip(mesh.boundary_flags()) {
        writeln!(out, "{:?} {:?} {}", p.x, p.y, b as u8).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> FvemError {
    FvemError::Parse {
        line,
        message: message.into(),
    }
}

fn fields<const K: usize>(line_no: usize, line: &str) -> Result<[&str; K]> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| parse_err(line_no, format!("expected {K} fields, found {}", p.len())))
}

fn number<T: std::str::FromStr>(line_no: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| parse_err(line_no, format!("cannot parse '{s}' as a number")))
}

/// Parses the text format and validates the result as a [`Mesh`].
pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(text.lines().count() + 1, format!("unexpected end of file, expected {what}")))
    };

    let (ln, header) = next("header")?;
    let [nv, nt] = fields::<2>(ln, header)?;
    let (nv, nt): (usize, usize) = (number(ln, nv)?, number(ln, nt)?);

    let mut vertices = Vec::with_capacity(nv);
    let mut boundary = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = next("a vertex line")?;
        let [x, y, flag] = fields::<3>(ln, line)?;
        let p = Point::new(number(ln, x)?, number(ln, y)?);
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(parse_err(ln, "non-finite coordinate"));
        }
        vertices.push(p);
        boundary.push(match flag {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(ln, format!("boundary flag must be 0 or 1, found '{other}'"))),
        });
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, line) = next("a triangle line")?;
        let [i, j, k] = fields::<3>(ln, line)?;
        triangles.push([number(ln, i)?, number(ln, j)?, number(ln, k)?]);
    }
    if let Ok((ln, _)) = next("nothing") {
        return Err(parse_err(ln, "trailing data after the last triangle"));
    }
    Mesh::new(vertices, triangles, boundary)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    read_mesh(&fs::read_to_string(path)?)
}

//! Triangulations of polygonal domains, their barycentric dual control
//! volumes and vertex patches.
//!
//! A [`Mesh`] is immutable once built. Construction validates orientation,
//! conformity and shape regularity, and numbers the interior vertices
//! contiguously; those numbers are the degrees of freedom of every assembled
//! matrix in the crate (homogeneous Dirichlet data on the boundary).

mod dual;
mod generate;
mod io;
mod patch;

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

pub use dual::{build_control_volumes, BoundarySegment, ControlVolume, VolumePiece};
pub use generate::{
    generate_almost_symmetric, generate_counterexample_interface, generate_counterexample_stripes,
    generate_piecewise_almost_symmetric, generate_uniform_symmetric, interface_grid, stripes_grid, tensor_mesh, Diagonal,
    MeshFamily, Subdomain,
};
pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};
pub use patch::{classify_patch, PatchSymmetry, Patch, DEFAULT_SYMMETRY_TOLERANCE};

use crate::error::{FvemError, Result};
use crate::geometry::{self, Point};

/// Default upper bound on the circumradius/inradius ratio of any triangle.
pub const DEFAULT_REGULARITY_BOUND: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_vertices: Vec<usize>,
    vertex_triangles: Vec<Vec<usize>>,
    h_max: f64,
    id: u64,
}

impl Mesh {
    /// Builds and validates a mesh with the default regularity bound.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, boundary: Vec<bool>) -> Result<Self> {
        Self::with_regularity_bound(vertices, triangles, boundary, DEFAULT_REGULARITY_BOUND)
    }

    pub fn with_regularity_bound(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        regularity_bound: f64,
    ) -> Result<Self> {
        let nv = vertices.len();
        if boundary.len() != nv {
            return Err(FvemError::InvalidMesh(format!(
                "{} boundary flags for {} vertices",
                boundary.len(),
                nv
            )));
        }
        if triangles.is_empty() {
            return Err(FvemError::InvalidMesh("mesh has no triangles".into()));
        }

        let mut vertex_triangles = vec![Vec::new(); nv];
        let mut h_max: f64 = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nv) {
                return Err(FvemError::InvalidMesh(format!(
                    "triangle {t} references vertex {bad}, but there are only {nv} vertices"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(FvemError::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let area = geometry::signed_area(p[0], p[1], p[2]);
            if !(area > 0.0) {
                return Err(FvemError::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
            let ratio = geometry::radius_ratio(&p);
            if ratio > regularity_bound {
                return Err(FvemError::InvalidMesh(format!(
                    "triangle {t} has radius ratio {ratio:.3} above the bound {regularity_bound}"
                )));
            }
            h_max = h_max.max(diameter(&p));
            for &v in tri {
                vertex_triangles[v].push(t);
            }
        }

        // Conformity: every edge is used once (boundary) or twice with
        // opposite orientations (interior).
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for a in 0..3 {
                let (i, j) = (tri[a], tri[(a + 1) % 3]);
                let key = (i.min(j), i.max(j));
                let entry = edges.entry(key).or_insert((0, 0));
                if i < j {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
                if entry.0 > 1 || entry.1 > 1 {
                    return Err(FvemError::InvalidMesh(format!(
                        "edge ({i}, {j}) of triangle {t} overlaps another triangle"
                    )));
                }
            }
        }
        let mut on_boundary_edge = vec![false; nv];
        for (&(i, j), &(fwd, bwd)) in &edges {
            if fwd + bwd == 1 {
                on_boundary_edge[i] = true;
                on_boundary_edge[j] = true;
            }
        }
        for v in 0..nv {
            if vertex_triangles[v].is_empty() {
                return Err(FvemError::InvalidMesh(format!("vertex {v} belongs to no triangle")));
            }
            if boundary[v] != on_boundary_edge[v] {
                return Err(FvemError::InvalidMesh(format!(
                    "vertex {v} boundary flag {} disagrees with the mesh topology",
                    boundary[v] as u8
                )));
            }
        }

        let mut interior_index = vec![None; nv];
        let mut interior_vertices = Vec::new();
        for v in 0..nv {
            if !boundary[v] {
                interior_index[v] = Some(interior_vertices.len());
                interior_vertices.push(v);
            }
        }

        let id = fingerprint(&vertices, &triangles);
        let mesh = Mesh {
            vertices,
            triangles,
            boundary,
            interior_index,
            interior_vertices,
            vertex_triangles,
            h_max,
            id,
        };
        // Interior vertices must be surrounded by a closed fan of triangles.
        for &z in &mesh.interior_vertices {
            mesh.patch(z)?;
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Contiguous degree-of-freedom number of an interior vertex.
    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_interior(&self) -> usize {
        self.interior_vertices.len()
    }

    /// Maximum triangle diameter.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Fingerprint of coordinates and connectivity, used to tie fields to meshes.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn triangles_of_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let p = self.triangle_points(t);
        geometry::signed_area(p[0], p[1], p[2])
    }

    pub fn barycenter(&self, t: usize) -> Point {
        geometry::barycenter(&self.triangle_points(t))
    }

    pub fn area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Largest circumradius/inradius ratio over all triangles.
    pub fn max_radius_ratio(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| geometry::radius_ratio(&self.triangle_points(t)))
            .fold(0.0, f64::max)
    }

    /// The patch of triangles around an interior vertex, ordered counter-clockwise.
    pub fn patch(&self, z: usize) -> Result<Patch> {
        Patch::build(self, z)
    }

    /// Patches of all interior vertices, in degree-of-freedom order.
    pub fn patches(&self) -> Vec<Patch> {
        self.interior_vertices
            .iter()
            .map(|&z| self.patch(z).expect("validated at construction"))
            .collect()
    }

    pub fn control_volumes(&self) -> Vec<ControlVolume> {
        build_control_volumes(self)
    }
}

fn diameter(p: &[Point; 3]) -> f64 {
    p[0].distance(p[1]).max(p[1].distance(p[2])).max(p[0].distance(p[2]))
}

fn fingerprint(vertices: &[Point], triangles: &[[usize; 3]]) -> u64 {
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    for p in vertices {
        p.x.to_bits().hash(&mut hasher);
        p.y.to_bits().hash(&mut hasher);
    }
    triangles.hash(&mut hasher);
    hasher.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_two_triangles() -> (Vec<Point>, Vec<[usize; 3]>, Vec<bool>) {
        (
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![true; 4],
        )
    }

    #[test]
    fn accepts_two_triangle_square() {
        let (v, t, b) = unit_square_two_triangles();
        let mesh = Mesh::new(v, t, b).unwrap();
        assert_eq!(mesh.num_interior(), 0);
        assert!((mesh.area() - 1.0).abs() < 1e-15);
        assert!((mesh.h_max() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_clockwise_triangle_by_id() {
        let (v, mut t, b) = unit_square_two_triangles();
        t[1] = [0, 3, 2];
        let err = Mesh::new(v, t, b).unwrap_err().to_string();
        assert!(err.contains("triangle 1"), "{err}");
    }

    #[test]
    fn rejects_wrong_boundary_flag() {
        let (v, t, mut b) = unit_square_two_triangles();
        b[2] = false;
        assert!(Mesh::new(v, t, b).is_err());
    }

    #[test]
    fn rejects_sliver_beyond_regularity_bound() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.01)];
        let err = Mesh::new(v, vec![[0, 1, 2]], vec![true; 3]).unwrap_err().to_string();
        assert!(err.contains("radius ratio"), "{err}");
    }

    #[test]
    fn rejects_overlapping_triangles() {
        let (v, mut t, b) = unit_square_two_triangles();
        t.push([0, 1, 2]);
        assert!(Mesh::new(v, t, b).is_err());
    }
}

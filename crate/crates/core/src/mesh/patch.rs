use crate::error::{FvemError, Result};
use crate::geometry::Point;

use super::Mesh;

/// Relative tolerance (in units of the patch size) for the point-reflection test.
pub const DEFAULT_SYMMETRY_TOLERANCE: f64 = 1e-9;

/// The union of triangles sharing an interior vertex.
///
/// Ring vertices run counter-clockwise; triangle `j` has vertices
/// `center, ring[j], ring[j + 1]` with the ring index taken cyclically, and
/// `weights[j]` is the area sum of triangles `j - 1` and `j`.
#[derive(Clone, Debug)]
pub struct Patch {
    pub center: usize,
    pub center_point: Point,
    pub ring_vertices: Vec<usize>,
    pub ring_points: Vec<Point>,
    pub ring_triangles: Vec<usize>,
    pub triangle_areas: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchSymmetry {
    Symmetric,
    Asymmetric,
}

impl Patch {
    pub(super) fn build(mesh: &Mesh, z: usize) -> Result<Patch> {
        if mesh.is_boundary(z) {
            return Err(FvemError::invalid(format!("vertex {z} is on the boundary")));
        }
        let incident = mesh.triangles_of_vertex(z);
        // (next ring vertex, triangle) keyed by the preceding ring vertex.
        let mut successor = Vec::with_capacity(incident.len());
        for &t in incident {
            let tri = mesh.triangles()[t];
            let pos = tri.iter().position(|&v| v == z).expect("incident triangle");
            successor.push((tri[(pos + 1) % 3], tri[(pos + 2) % 3], t));
        }
        let k = successor.len();
        let mut ring_vertices = Vec::with_capacity(k);
        let mut ring_triangles = Vec::with_capacity(k);
        let start = successor[0].0;
        let mut current = start;
        for _ in 0..k {
            let &(_, next, t) = successor
                .iter()
                .find(|(a, _, _)| *a == current)
                .ok_or_else(|| FvemError::InvalidMesh(format!("fan around vertex {z} is not closed")))?;
            ring_vertices.push(current);
            ring_triangles.push(t);
            current = next;
        }
        if current != start {
            return Err(FvemError::InvalidMesh(format!(
                "fan around vertex {z} does not close after {k} triangles"
            )));
        }
        let triangle_areas: Vec<f64> = ring_triangles.iter().map(|&t| mesh.triangle_area(t)).collect();
        let weights = (0..k)
            .map(|j| triangle_areas[(j + k - 1) % k] + triangle_areas[j])
            .collect();
        Ok(Patch {
            center: z,
            center_point: mesh.vertex(z),
            ring_points: ring_vertices.iter().map(|&v| mesh.vertex(v)).collect(),
            ring_vertices,
            ring_triangles,
            triangle_areas,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.ring_vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring_vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.triangle_areas.iter().sum()
    }

    /// Largest distance from the center to a ring vertex.
    pub fn radius(&self) -> f64 {
        self.ring_points
            .iter()
            .map(|p| p.distance(self.center_point))
            .fold(0.0, f64::max)
    }

    /// Weighted stencil `-(1/54) sum_j w_j (chi(ring_j) - chi(center))`.
    ///
    /// `values` are indexed by vertex id (boundary vertices carry 0).
    pub fn quadrature_error_stencil(&self, values: &[f64]) -> f64 {
        let c = values[self.center];
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.ring_vertices)
            .map(|(w, &v)| w * (values[v] - c))
            .sum();
        -s / 54.0
    }

    /// First moment `sum_j w_j (ring_j - center)`; zero for symmetric patches.
    pub fn weighted_moment(&self) -> Point {
        self.weights
            .iter()
            .zip(&self.ring_points)
            .fold(Point::default(), |acc, (&w, &p)| acc + (p - self.center_point) * w)
    }
}

/// Point-reflection test: the patch is symmetric iff `2 center - ring_j`
/// is again a ring vertex for every `j`, up to `tolerance * radius`.
pub fn classify_patch(patch: &Patch, tolerance: f64) -> PatchSymmetry {
    let k = patch.len();
    if k % 2 == 1 {
        return PatchSymmetry::Asymmetric;
    }
    let tol = tolerance * patch.radius();
    let mut used = vec![false; k];
    for p in &patch.ring_points {
        let reflected = patch.center_point * 2.0 - *p;
        let hit = patch
            .ring_points
            .iter()
            .enumerate()
            .find(|(i, q)| !used[*i] && q.distance(reflected) <= tol);
        match hit {
            Some((i, _)) => used[i] = true,
            None => return PatchSymmetry::Asymmetric,
        }
    }
    PatchSymmetry::Symmetric
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_counterexample_stripes, generate_uniform_symmetric};

    #[test]
    fn uniform_patch_is_symmetric_with_six_triangles() {
        let mesh = generate_uniform_symmetric(2).unwrap();
        assert_eq!(mesh.num_interior(), 1);
        let patch = mesh.patch(mesh.interior_vertices()[0]).unwrap();
        assert_eq!(patch.len(), 6);
        assert_eq!(classify_patch(&patch, DEFAULT_SYMMETRY_TOLERANCE), PatchSymmetry::Symmetric);
        assert!(patch.weighted_moment().norm() < 1e-15);
    }

    #[test]
    fn weights_sum_to_twice_patch_area() {
        let mesh = generate_counterexample_stripes(8).unwrap();
        for patch in mesh.patches() {
            let w: f64 = patch.weights.iter().sum();
            assert!((w - 2.0 * patch.area()).abs() <= 1e-13 * patch.area());
        }
    }

    #[test]
    fn odd_fan_is_asymmetric() {
        // Pentagon fan around the origin.
        let mut v = vec![Point::new(0.0, 0.0)];
        for i in 0..5 {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 5.0;
            v.push(Point::new(a.cos(), a.sin()));
        }
        let tris = (0..5).map(|i| [0, 1 + i, 1 + (i + 1) % 5]).collect();
        let mut b = vec![true; 6];
        b[0] = false;
        let mesh = Mesh::new(v, tris, b).unwrap();
        let patch = mesh.patch(0).unwrap();
        assert_eq!(classify_patch(&patch, DEFAULT_SYMMETRY_TOLERANCE), PatchSymmetry::Asymmetric);
    }
}

use crate::geometry::{self, Point};

use super::Mesh;

/// Part of a control volume inside one triangle: the quadrilateral
/// `z, mid(z, a), barycenter, mid(z, b)`.
#[derive(Clone, Debug)]
pub struct VolumePiece {
    pub triangle: usize,
    pub corners: [Point; 4],
    pub area: f64,
}

/// Straight piece of the control-volume boundary with its outward unit normal.
#[derive(Clone, Debug)]
pub struct BoundarySegment {
    pub triangle: usize,
    pub start: Point,
    pub end: Point,
    pub normal: Point,
    pub length: f64,
    /// Segment lies on the domain boundary rather than inside it.
    pub on_domain_boundary: bool,
}

/// Barycentric dual control volume around a vertex.
#[derive(Clone, Debug)]
pub struct ControlVolume {
    pub vertex: usize,
    pub pieces: Vec<VolumePiece>,
    pub boundary_segments: Vec<BoundarySegment>,
}

impl ControlVolume {
    pub fn area(&self) -> f64 {
        self.pieces.iter().map(|p| p.area).sum()
    }

    /// `sum n * length` over the boundary; vanishes for a closed boundary.
    pub fn normal_integral(&self) -> Point {
        self.boundary_segments
            .iter()
            .fold(Point::default(), |acc, s| acc + s.normal * s.length)
    }
}

fn segment(triangle: usize, start: Point, end: Point, on_domain_boundary: bool) -> BoundarySegment {
    let d = end - start;
    let length = d.norm();
    BoundarySegment {
        triangle,
        start,
        end,
        normal: d.rotate_cw() * (1.0 / length),
        length,
        on_domain_boundary,
    }
}

/// One control volume per mesh vertex, indexed by vertex id.
pub fn build_control_volumes(mesh: &Mesh) -> Vec<ControlVolume> {
    let boundary_edge = |i: usize, j: usize| {
        // An edge is on the domain boundary iff exactly one triangle uses it.
        mesh.triangles_of_vertex(i)
            .iter()
            .filter(|&&t| mesh.triangles()[t].contains(&j))
            .count()
            == 1
    };
    (0..mesh.num_vertices())
        .map(|z| {
            let mut pieces = Vec::new();
            let mut boundary_segments = Vec::new();
            for &t in mesh.triangles_of_vertex(z) {
                let tri = mesh.triangles()[t];
                let pos = tri.iter().position(|&v| v == z).unwrap();
                let (a, b) = (tri[(pos + 1) % 3], tri[(pos + 2) % 3]);
                let pz = mesh.vertex(z);
                let m_a = pz.midpoint(mesh.vertex(a));
                let m_b = pz.midpoint(mesh.vertex(b));
                let c = mesh.barycenter(t);
                let corners = [pz, m_a, c, m_b];
                pieces.push(VolumePiece {
                    triangle: t,
                    corners,
                    area: geometry::polygon_area(&corners),
                });
                // Counter-clockwise walk z -> m_a -> c -> m_b -> z; outward normals point right.
                if boundary_edge(z, a) {
                    boundary_segments.push(segment(t, pz, m_a, true));
                }
                boundary_segments.push(segment(t, m_a, c, false));
                boundary_segments.push(segment(t, c, m_b, false));
                if boundary_edge(z, b) {
                    boundary_segments.push(segment(t, m_b, pz, true));
                }
            }
            ControlVolume {
                vertex: z,
                pieces,
                boundary_segments,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_counterexample_stripes, generate_uniform_symmetric};

    #[test]
    fn single_triangle_pieces_trisect_area() {
        let mesh = Mesh::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            vec![true; 3],
        )
        .unwrap();
        let cvs = build_control_volumes(&mesh);
        for cv in &cvs {
            assert_eq!(cv.pieces.len(), 1);
            assert!((cv.pieces[0].area - 0.5 / 3.0).abs() < 1e-16);
        }
    }

    #[test]
    fn volumes_partition_and_close() {
        for mesh in [generate_uniform_symmetric(4).unwrap(), generate_counterexample_stripes(8).unwrap()] {
            let cvs = build_control_volumes(&mesh);
            let total: f64 = cvs.iter().map(|c| c.area()).sum();
            assert!((total - mesh.area()).abs() <= 1e-13);
            for cv in &cvs {
                let incident: f64 = mesh
                    .triangles_of_vertex(cv.vertex)
                    .iter()
                    .map(|&t| mesh.triangle_area(t) / 3.0)
                    .sum();
                assert!((cv.area() - incident).abs() < 1e-15);
                assert!(cv.normal_integral().norm() < 1e-14);
            }
        }
    }
}

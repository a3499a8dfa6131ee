//! Structured triangulations of the unit square: the symmetric reference
//! family, its O(h^2) perturbations, piecewise variants, and the two
//! counterexample families built on non-uniform tensor grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FvemError, Result};
use crate::geometry::{self, Point};

use super::Mesh;

/// How each grid rectangle is cut into two triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagonal {
    /// Cut from the lower-left to the upper-right corner.
    Main,
    /// Cut from the upper-left to the lower-right corner.
    Anti,
}

/// An axis-aligned rectangle of the unit square with its own triangulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subdomain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub diagonal: Diagonal,
    /// Perturbation radius in units of h^2.
    pub amplitude: f64,
}

impl Subdomain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, diagonal: Diagonal, amplitude: f64) -> Self {
        Subdomain {
            x0,
            x1,
            y0,
            y1,
            diagonal,
            amplitude,
        }
    }

    pub fn unit_square(diagonal: Diagonal, amplitude: f64) -> Self {
        Subdomain::new(0.0, 1.0, 0.0, 1.0, diagonal, amplitude)
    }

    /// Left and right halves with opposite diagonal directions.
    pub fn halves(amplitude: f64) -> Vec<Subdomain> {
        vec![
            Subdomain::new(0.0, 0.5, 0.0, 1.0, Diagonal::Anti, amplitude),
            Subdomain::new(0.5, 1.0, 0.0, 1.0, Diagonal::Main, amplitude),
        ]
    }
}

/// A member of one of the supported mesh families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeshFamily {
    UniformSymmetric { n: usize },
    AlmostSymmetric { n: usize, amplitude: f64, seed: u64 },
    PiecewiseAlmostSymmetric { n: usize, layout: Vec<Subdomain>, seed: u64 },
    CounterexampleStripes { n: usize },
    CounterexampleInterface { j: usize },
}

impl MeshFamily {
    pub fn generate(&self) -> Result<Mesh> {
        match self {
            MeshFamily::UniformSymmetric { n } => generate_uniform_symmetric(*n),
            MeshFamily::AlmostSymmetric { n, amplitude, seed } => {
                generate_almost_symmetric(*n, *amplitude, *seed)
            }
            MeshFamily::PiecewiseAlmostSymmetric { n, layout, seed } => {
                generate_piecewise_almost_symmetric(layout, *n, *seed)
            }
            MeshFamily::CounterexampleStripes { n } => generate_counterexample_stripes(*n),
            MeshFamily::CounterexampleInterface { j } => generate_counterexample_interface(*j),
        }
    }

    /// Short name used in reports and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::UniformSymmetric { .. } => "symmetric",
            MeshFamily::AlmostSymmetric { .. } => "almost-symmetric",
            MeshFamily::PiecewiseAlmostSymmetric { .. } => "piecewise",
            MeshFamily::CounterexampleStripes { .. } => "stripes",
            MeshFamily::CounterexampleInterface { .. } => "interface",
        }
    }

    /// Refinement parameter: N for grid families, J for the interface family.
    pub fn level(&self) -> usize {
        match self {
            MeshFamily::UniformSymmetric { n }
            | MeshFamily::AlmostSymmetric { n, .. }
            | MeshFamily::PiecewiseAlmostSymmetric { n, .. }
            | MeshFamily::CounterexampleStripes { n } => *n,
            MeshFamily::CounterexampleInterface { j } => *j,
        }
    }

    /// The same family at another refinement level.
    pub fn at_level(&self, level: usize) -> MeshFamily {
        let mut next = self.clone();
        match &mut next {
            MeshFamily::UniformSymmetric { n }
            | MeshFamily::AlmostSymmetric { n, .. }
            | MeshFamily::PiecewiseAlmostSymmetric { n, .. }
            | MeshFamily::CounterexampleStripes { n } => *n = level,
            MeshFamily::CounterexampleInterface { j } => *j = level,
        }
        next
    }

    /// The mesh-size parameter h the family is defined with.
    pub fn nominal_h(&self) -> f64 {
        match self {
            MeshFamily::UniformSymmetric { n }
            | MeshFamily::AlmostSymmetric { n, .. }
            | MeshFamily::PiecewiseAlmostSymmetric { n, .. } => 1.0 / *n as f64,
            MeshFamily::CounterexampleStripes { n } => 4.0 / (3.0 * *n as f64),
            MeshFamily::CounterexampleInterface { j } => 1.0 / (4.0 * *j as f64),
        }
    }
}

fn grid_index(j: usize, m: usize, nx: usize) -> usize {
    m * (nx + 1) + j
}

fn tensor_mesh_with(xs: &[f64], ys: &[f64], diagonal: impl Fn(usize, usize) -> Diagonal) -> (Vec<Point>, Vec<[usize; 3]>, Vec<bool>) {
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for (m, &y) in ys.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            vertices.push(Point::new(x, y));
            boundary.push(j == 0 || j == nx || m == 0 || m == ny);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for m in 0..ny {
        for j in 0..nx {
            let a = grid_index(j, m, nx);
            let b = grid_index(j + 1, m, nx);
            let c = grid_index(j + 1, m + 1, nx);
            let d = grid_index(j, m + 1, nx);
            match diagonal(j, m) {
                Diagonal::Main => {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
                Diagonal::Anti => {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
    }
    (vertices, triangles, boundary)
}

/// Tensor-product grid split with a single diagonal direction.
pub fn tensor_mesh(xs: &[f64], ys: &[f64], diagonal: Diagonal) -> Result<Mesh> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(FvemError::invalid("a tensor grid needs at least two coordinates per axis"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FvemError::invalid("grid coordinates must be strictly increasing"));
    }
    let (v, t, b) = tensor_mesh_with(xs, ys, |_, _| diagonal);
    Mesh::new(v, t, b)
}

fn uniform_coordinates(n: usize) -> Vec<f64> {
    (0..=n).map(|j| j as f64 / n as f64).collect()
}

/// Unit square, N x N cells, each cut along the anti-diagonal; h = sqrt(2)/N.
pub fn generate_uniform_symmetric(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(FvemError::invalid(format!("need N >= 2 cells per side, got {n}")));
    }
    let xs = uniform_coordinates(n);
    tensor_mesh(&xs, &xs, Diagonal::Anti)
}

/// Grid lines of the stripes counterexample: column widths alternate h/2 and h,
/// rows have height h, with h = 4/(3N).
pub fn stripes_grid(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || !n.is_multiple_of(4) {
        return Err(FvemError::invalid(format!("N must be a positive multiple of 4, got {n}")));
    }
    let nf = n as f64;
    // x_{2i} = 2i/N and x_{2i+1} = x_{2i} + h/2, written with integer numerators so x_N = 1 exactly.
    let xs = (0..=n)
        .map(|j| {
            if j % 2 == 0 {
                j as f64 / nf
            } else {
                (3 * (j - 1) + 2) as f64 / (3.0 * nf)
            }
        })
        .collect();
    let rows = 3 * n / 4;
    let ys = (0..=rows).map(|m| (4 * m) as f64 / (3.0 * nf)).collect();
    Ok((xs, ys))
}

/// Nonsymmetric counterexample mesh on the unit square (no interior vertex has
/// a point-symmetric patch).
///
/// The anti-diagonal cut makes the patch at every even grid column consist of
/// three triangles of area h^2/4 to the right and three of area h^2/2 to the left.
pub fn generate_counterexample_stripes(n: usize) -> Result<Mesh> {
    let (xs, ys) = stripes_grid(n)?;
    tensor_mesh(&xs, &ys, Diagonal::Anti)
}

/// Grid lines of the interface counterexample: spacing h = 1/(4J) on
/// [0, 1/4] and h/2 on [1/4, 1], with N = 7J columns and M = 4J rows.
pub fn interface_grid(j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if j < 1 {
        return Err(FvemError::invalid("J must be at least 1"));
    }
    let n = 7 * j;
    let xs = (0..=n)
        .map(|i| {
            if i <= j {
                i as f64 / (4 * j) as f64
            } else {
                (j + i) as f64 / (8 * j) as f64
            }
        })
        .collect();
    let ys = (0..=4 * j).map(|m| m as f64 / (4 * j) as f64).collect();
    Ok((xs, ys))
}

/// Piecewise symmetric mesh whose only asymmetric patches sit on the line x = 1/4.
///
/// Cells are cut along the main diagonal. A patch on x = 1/4 then has three
/// triangles of area h^2/2 on the left and three of area h^2/4 on the right,
/// the mirror image of the stripes patch.
pub fn generate_counterexample_interface(j: usize) -> Result<Mesh> {
    let (xs, ys) = interface_grid(j)?;
    tensor_mesh(&xs, &ys, Diagonal::Main)
}

/// Symmetric mesh with every interior vertex moved uniformly at random
/// within a disk of radius `amplitude * h^2` (h the maximum diameter).
pub fn generate_almost_symmetric(n: usize, amplitude: f64, seed: u64) -> Result<Mesh> {
    generate_piecewise_almost_symmetric(&[Subdomain::unit_square(Diagonal::Anti, amplitude)], n, seed)
}

#[derive(Clone, Copy)]
enum Freedom {
    Fixed,
    Free(f64),
    AlongX(f64),
    AlongY(f64),
}

/// Union of independently perturbed symmetric meshes on rectangles tiling the
/// unit square. Vertices on an interface between two subdomains only move
/// along the interface; vertices where three or more subdomains meet are fixed.
pub fn generate_piecewise_almost_symmetric(layout: &[Subdomain], n: usize, seed: u64) -> Result<Mesh> {
    if n < 2 {
        return Err(FvemError::invalid(format!("need N >= 2 cells per side, got {n}")));
    }
    if layout.is_empty() {
        return Err(FvemError::invalid("layout has no subdomains"));
    }
    let nf = n as f64;
    let snap = |v: f64, what: &str| -> Result<usize> {
        let k = (v * nf).round();
        if (v * nf - k).abs() > 1e-9 || !(0.0..=nf).contains(&k) {
            return Err(FvemError::invalid(format!(
                "subdomain {what} {v} is not on the 1/{n} grid: incompatible interface discretization"
            )));
        }
        Ok(k as usize)
    };
    let mut owner = vec![usize::MAX; n * n];
    for (s, sub) in layout.iter().enumerate() {
        if !(sub.amplitude >= 0.0 && sub.amplitude.is_finite()) {
            return Err(FvemError::invalid(format!("subdomain {s} has invalid amplitude {}", sub.amplitude)));
        }
        let (j0, j1) = (snap(sub.x0, "edge")?, snap(sub.x1, "edge")?);
        let (m0, m1) = (snap(sub.y0, "edge")?, snap(sub.y1, "edge")?);
        if j0 >= j1 || m0 >= m1 {
            return Err(FvemError::invalid(format!("subdomain {s} is empty")));
        }
        for m in m0..m1 {
            for j in j0..j1 {
                if owner[m * n + j] != usize::MAX {
                    return Err(FvemError::invalid(format!("subdomains {} and {s} overlap", owner[m * n + j])));
                }
                owner[m * n + j] = s;
            }
        }
    }
    if owner.contains(&usize::MAX) {
        return Err(FvemError::invalid("subdomains do not cover the unit square"));
    }

    let xs = uniform_coordinates(n);
    let (mut vertices, triangles, boundary) =
        tensor_mesh_with(&xs, &xs, |j, m| layout[owner[m * n + j]].diagonal);
    let h = 2f64.sqrt() / nf;
    let h2 = h * h;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in 0..=n {
        for j in 0..=n {
            let v = grid_index(j, m, n);
            if boundary[v] {
                continue;
            }
            // Owners of the four surrounding cells: SW, SE, NW, NE.
            let sw = owner[(m - 1) * n + j - 1];
            let se = owner[(m - 1) * n + j];
            let nw = owner[m * n + j - 1];
            let ne = owner[m * n + j];
            let amp = |s: usize| layout[s].amplitude * h2;
            let freedom = if sw == se && se == nw && nw == ne {
                Freedom::Free(amp(sw))
            } else if sw == nw && se == ne {
                // vertical interface
                Freedom::AlongY(amp(sw).min(amp(se)))
            } else if sw == se && nw == ne {
                Freedom::AlongX(amp(sw).min(amp(nw)))
            } else {
                Freedom::Fixed
            };
            let (u, w): (f64, f64) = (rng.random(), rng.random());
            let shift = match freedom {
                Freedom::Fixed => Point::default(),
                Freedom::Free(r) => {
                    let (s, c) = (2.0 * std::f64::consts::PI * w).sin_cos();
                    Point::new(c, s) * (r * u.sqrt())
                }
                Freedom::AlongX(r) => Point::new(r * (2.0 * u - 1.0), 0.0),
                Freedom::AlongY(r) => Point::new(0.0, r * (2.0 * u - 1.0)),
            };
            vertices[v] = vertices[v] + shift;
        }
    }

    for (t, tri) in triangles.iter().enumerate() {
        let area = geometry::signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if !(area > 0.0) {
            return Err(FvemError::GenerationFailed {
                triangle: t,
                reason: format!("perturbation produced signed area {area:e}"),
            });
        }
    }
    Mesh::new(vertices, triangles, boundary).map_err(|e| FvemError::GenerationFailed {
        triangle: usize::MAX,
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{classify_patch, PatchSymmetry, DEFAULT_SYMMETRY_TOLERANCE};

    fn asymmetric_vertices(mesh: &Mesh) -> Vec<usize> {
        mesh.patches()
            .iter()
            .filter(|p| classify_patch(p, DEFAULT_SYMMETRY_TOLERANCE) == PatchSymmetry::Asymmetric)
            .map(|p| p.center)
            .collect()
    }

    #[test]
    fn smallest_symmetric_mesh() {
        let mesh = generate_uniform_symmetric(2).unwrap();
        assert_eq!(mesh.num_triangles(), 8);
        assert_eq!(mesh.num_interior(), 1);
        assert_eq!(mesh.patch(mesh.interior_vertices()[0]).unwrap().len(), 6);
        assert!(generate_uniform_symmetric(1).is_err());
    }

    #[test]
    fn symmetric_n4_counts_and_classification() {
        let mesh = generate_uniform_symmetric(4).unwrap();
        assert_eq!(mesh.num_triangles(), 32);
        assert_eq!(mesh.num_interior(), 9);
        assert!(asymmetric_vertices(&mesh).is_empty());
        assert!((mesh.h_max() - 2f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn stripes_coordinates_for_n4() {
        let (xs, ys) = stripes_grid(4).unwrap();
        let h = 1.0 / 3.0;
        let expected = [0.0, 0.5 * h, 1.5 * h, 2.0 * h, 3.0 * h];
        for (x, e) in xs.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15, "{xs:?}");
        }
        assert_eq!(xs[4], 1.0);
        assert_eq!(ys.len(), 4);
        assert_eq!(*ys.last().unwrap(), 1.0);
        assert!(stripes_grid(6).is_err());
        assert!(generate_counterexample_stripes(10).is_err());
    }

    #[test]
    fn stripes_patch_areas_match_listing() {
        // At even columns: three triangles of area h^2/4 then three of h^2/2,
        // starting from the vertex directly below, counter-clockwise.
        let n = 8;
        let mesh = generate_counterexample_stripes(n).unwrap();
        let h = 4.0 / (3.0 * n as f64);
        let (xs, ys) = stripes_grid(n).unwrap();
        let z = grid_index(2, 2, n);
        assert_eq!(mesh.vertex(z), Point::new(xs[2], ys[2]));
        let patch = mesh.patch(z).unwrap();
        assert_eq!(patch.len(), 6);
        let below = patch
            .ring_points
            .iter()
            .position(|p| (p.x - xs[2]).abs() < 1e-14 && p.y < ys[2])
            .unwrap();
        let areas: Vec<f64> = (0..6).map(|i| patch.triangle_areas[(below + i) % 6]).collect();
        let weights: Vec<f64> = (0..6).map(|i| patch.weights[(below + i) % 6]).collect();
        for i in 0..3 {
            assert!((areas[i] - 0.25 * h * h).abs() < 1e-15);
            assert!((areas[i + 3] - 0.5 * h * h).abs() < 1e-15);
        }
        let stencil = [3.0, 2.0, 2.0, 3.0, 4.0, 4.0];
        for (w, s) in weights.iter().zip(stencil) {
            assert!((w - s * h * h / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn stripes_has_no_symmetric_patch() {
        let mesh = generate_counterexample_stripes(8).unwrap();
        assert_eq!(asymmetric_vertices(&mesh).len(), mesh.num_interior());
    }

    #[test]
    fn interface_grid_for_j1() {
        let (xs, ys) = interface_grid(1).unwrap();
        let expected = [0.0, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0];
        assert_eq!(xs, expected);
        assert_eq!(ys.len(), 5);
        assert!(interface_grid(0).is_err());
    }

    #[test]
    fn interface_asymmetry_only_on_quarter_line() {
        for j in [1, 2, 4] {
            let mesh = generate_counterexample_interface(j).unwrap();
            assert_eq!(mesh.num_vertices(), (7 * j + 1) * (4 * j + 1));
            let asym = asymmetric_vertices(&mesh);
            assert_eq!(asym.len(), 4 * j - 1);
            assert!(asym.iter().all(|&v| (mesh.vertex(v).x - 0.25).abs() < 1e-15));
        }
    }

    #[test]
    fn zero_amplitude_reproduces_symmetric_mesh() {
        let base = generate_uniform_symmetric(8).unwrap();
        let pert = generate_almost_symmetric(8, 0.0, 7).unwrap();
        assert_eq!(base.vertices(), pert.vertices());
        assert_eq!(base.triangles(), pert.triangles());
    }

    #[test]
    fn perturbation_bounded_by_amplitude_h2() {
        let n = 16;
        let base = generate_uniform_symmetric(n).unwrap();
        let pert = generate_almost_symmetric(n, 1.0, 42).unwrap();
        let h = base.h_max();
        let max_shift = base
            .vertices()
            .iter()
            .zip(pert.vertices())
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max);
        assert!(max_shift <= h * h);
        assert!(max_shift > 0.1 * h * h);
        for v in 0..base.num_vertices() {
            if base.is_boundary(v) {
                assert_eq!(base.vertex(v), pert.vertex(v));
            }
        }
        let again = generate_almost_symmetric(n, 1.0, 42).unwrap();
        assert_eq!(again.vertices(), pert.vertices());
    }

    #[test]
    fn huge_amplitude_fails_with_triangle() {
        let err = generate_almost_symmetric(4, 40.0, 3).unwrap_err();
        assert!(matches!(err, FvemError::GenerationFailed { .. }), "{err}");
    }

    #[test]
    fn halves_layout_is_asymmetric_only_near_interface() {
        let n = 8;
        let mesh = generate_piecewise_almost_symmetric(&Subdomain::halves(0.0), n, 1).unwrap();
        let asym = asymmetric_vertices(&mesh);
        assert_eq!(asym.len(), n - 1);
        for v in asym {
            assert!((mesh.vertex(v).x - 0.5).abs() <= 1.0 / n as f64);
        }
    }

    #[test]
    fn single_subdomain_reduces_to_almost_symmetric() {
        let a = generate_piecewise_almost_symmetric(&[Subdomain::unit_square(Diagonal::Anti, 0.5)], 8, 11).unwrap();
        let b = generate_almost_symmetric(8, 0.5, 11).unwrap();
        assert_eq!(a.vertices(), b.vertices());
    }

    #[test]
    fn perturbed_interface_vertices_stay_on_interface() {
        let n = 8;
        let mesh = generate_piecewise_almost_symmetric(&Subdomain::halves(1.0), n, 5).unwrap();
        for m in 1..n {
            let v = grid_index(n / 2, m, n);
            assert_eq!(mesh.vertex(v).x, 0.5);
        }
    }

    #[test]
    fn incompatible_layouts_are_rejected() {
        let off_grid = vec![
            Subdomain::new(0.0, 0.3, 0.0, 1.0, Diagonal::Anti, 0.0),
            Subdomain::new(0.3, 1.0, 0.0, 1.0, Diagonal::Main, 0.0),
        ];
        assert!(matches!(
            generate_piecewise_almost_symmetric(&off_grid, 8, 0),
            Err(FvemError::InvalidParameter(_))
        ));
        let gap = vec![Subdomain::new(0.0, 0.5, 0.0, 1.0, Diagonal::Anti, 0.0)];
        assert!(generate_piecewise_almost_symmetric(&gap, 8, 0).is_err());
    }

    #[test]
    fn refinement_halves_h() {
        for (a, b) in [
            (generate_uniform_symmetric(8).unwrap(), generate_uniform_symmetric(16).unwrap()),
            (generate_counterexample_stripes(8).unwrap(), generate_counterexample_stripes(16).unwrap()),
            (generate_counterexample_interface(2).unwrap(), generate_counterexample_interface(4).unwrap()),
        ] {
            let ratio = a.h_max() / b.h_max();
            assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
        }
    }
}

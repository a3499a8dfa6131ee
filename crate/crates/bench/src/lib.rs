//! Shared fixtures for the benchmarks.

use fvem::{Discretization, Mesh, MeshFamily, NodalField, Point};

/// Refinement levels benchmarked for each family.
pub const LEVELS: [usize; 3] = [16, 32, 64];

pub fn symmetric(n: usize) -> Mesh {
    MeshFamily::UniformSymmetric { n }.generate().expect("valid level")
}

pub fn stripes(n: usize) -> Mesh {
    MeshFamily::CounterexampleStripes { n }.generate().expect("valid level")
}

pub fn almost_symmetric(n: usize) -> Mesh {
    MeshFamily::AlmostSymmetric { n, amplitude: 0.3, seed: 1 }.generate().expect("valid level")
}

/// Interpolant of `2 sin(pi x) sin(pi y)`.
pub fn phi11(disc: &Discretization) -> NodalField {
    use std::f64::consts::PI;
    disc.interpolate(&|p: Point| 2.0 * (PI * p.x).sin() * (PI * p.y).sin())
}

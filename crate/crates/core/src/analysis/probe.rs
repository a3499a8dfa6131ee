//! Nonsmooth probe data and the quantity `||E~_h(t) Delta~_h Q_h v_h|| / ||v_h||`.
//!
//! The probe square is `P = [1/4 - d, 1/4 + d]^2`. On it `grad(phi_1).(3, -1)`
//! is bounded below by 1, which is what makes the probe data excite the
//! quadrature error of asymmetric patches.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FvemError, Result};
use crate::field::NodalField;
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::operators::Discretization;
use crate::timestepping::Propagator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbePattern {
    /// Vertices on even grid columns inside `P`.
    StripesAllCells,
    /// Vertices on the line `x = 1/4` inside `P`.
    InterfaceLine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProbeConfig")]
pub struct ProbeConfig {
    pattern: ProbePattern,
    d: f64,
    t: f64,
}

#[derive(Deserialize)]
struct RawProbeConfig {
    pattern: ProbePattern,
    d: f64,
    t: f64,
}

impl TryFrom<RawProbeConfig> for ProbeConfig {
    type Error = FvemError;

    fn try_from(raw: RawProbeConfig) -> Result<ProbeConfig> {
        ProbeConfig::new(raw.pattern, raw.d, raw.t)
    }
}

pub const DEFAULT_PROBE_HALF_WIDTH: f64 = 0.065;
pub const DEFAULT_PROBE_TIME: f64 = 0.1;
/// Grid resolution used to check the lower bound on `P`.
const CHECK_POINTS: usize = 401;

/// `grad(phi_1)(x, y) . (3, -1)`.
pub fn probe_direction_derivative(p: Point) -> f64 {
    let (sx, cx) = (PI * p.x).sin_cos();
    let (sy, cy) = (PI * p.y).sin_cos();
    2.0 * PI * (3.0 * cx * sy - sx * cy)
}

impl ProbeConfig {
    pub fn new(pattern: ProbePattern, d: f64, t: f64) -> Result<ProbeConfig> {
        if !(d > 0.0 && d < 0.25) {
            return Err(FvemError::invalid(format!("probe half-width must lie in (0, 1/4), got {d}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(FvemError::invalid(format!("probe time must be positive, got {t}")));
        }
        let min = min_on_square(d);
        if min < 1.0 {
            return Err(FvemError::invalid(format!(
                "grad(phi_1).(3,-1) drops to {min:.4} on the probe square with d = {d}; it must stay >= 1"
            )));
        }
        Ok(ProbeConfig { pattern, d, t })
    }

    pub fn with_pattern(pattern: ProbePattern) -> ProbeConfig {
        ProbeConfig::new(pattern, DEFAULT_PROBE_HALF_WIDTH, DEFAULT_PROBE_TIME).expect("default probe square is valid")
    }

    pub fn pattern(&self) -> ProbePattern {
        self.pattern
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-12;
        (p.x - 0.25).abs() <= self.d + tol && (p.y - 0.25).abs() <= self.d + tol
    }
}

/// Minimum of the directional derivative over a uniform grid on `P`.
pub fn min_on_square(d: f64) -> f64 {
    let lo = 0.25 - d;
    let step = 2.0 * d / (CHECK_POINTS - 1) as f64;
    let mut min = f64::INFINITY;
    for i in 0..CHECK_POINTS {
        for j in 0..CHECK_POINTS {
            let p = Point::new(lo + i as f64 * step, lo + j as f64 * step);
            min = min.min(probe_direction_derivative(p));
        }
    }
    min
}

/// Sorted distinct coordinates, merged within `1e-12`.
fn distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    v
}

/// Interior vertices selected by the pattern (indices into the DOF numbering).
pub fn probe_nodes(mesh: &Mesh, config: &ProbeConfig) -> Result<Vec<usize>> {
    let xs = distinct(mesh.vertices().iter().map(|p| p.x).collect());
    let ys = distinct(mesh.vertices().iter().map(|p| p.y).collect());
    if xs.len() * ys.len() != mesh.num_vertices() {
        return Err(FvemError::invalid("probe patterns need a tensor-product mesh"));
    }
    let column = |x: f64| xs.partition_point(|&c| c < x - 1e-12);
    let nodes: Vec<usize> = mesh
        .interior_vertices()
        .iter()
        .enumerate()
        .filter(|&(_, &z)| {
            let p = mesh.vertex(z);
            config.contains(p)
                && match config.pattern {
                    ProbePattern::StripesAllCells => column(p.x) % 2 == 0,
                    ProbePattern::InterfaceLine => (p.x - 0.25).abs() <= 1e-12,
                }
        })
        .map(|(i, _)| i)
        .collect();
    if nodes.is_empty() {
        return Err(FvemError::invalid(format!(
            "no probe vertices in the square of half-width {}; refine the mesh or enlarge d",
            config.d
        )));
    }
    Ok(nodes)
}

/// `v_h = sum of the nodal basis functions over the probe vertices`.
pub fn probe_vector(mesh: &Mesh, config: &ProbeConfig) -> Result<NodalField> {
    let mut v = NodalField::zeros(mesh);
    for i in probe_nodes(mesh, config)? {
        v.values_mut()[i] = 1.0;
    }
    Ok(v)
}

/// `||E~_h(t) Delta~_h Q_h v_h|| / ||v_h||` in the L2 norm.
pub fn probe_quantity(prop: &Propagator, vh: &NodalField, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(FvemError::invalid(format!("probe time must be positive, got {t}")));
    }
    let disc: &Discretization = prop.discretization();
    let norm = disc.l2_norm(vh);
    if norm == 0.0 {
        return Err(FvemError::invalid("probe data is zero"));
    }
    let w = disc.qh_apply(vh)?;
    let z = disc.discrete_operator_apply(&w)?;
    let e = prop.propagate(&z, t)?;
    Ok(disc.l2_norm(&e) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_counterexample_interface, generate_counterexample_stripes, generate_uniform_symmetric};

    #[test]
    fn config_validation() {
        assert!(ProbeConfig::new(ProbePattern::StripesAllCells, 0.065, 0.1).is_ok());
        assert!(ProbeConfig::new(ProbePattern::StripesAllCells, 0.15, 0.1).is_err());
        assert!(ProbeConfig::new(ProbePattern::StripesAllCells, 0.0, 0.1).is_err());
        assert!(ProbeConfig::new(ProbePattern::StripesAllCells, 0.3, 0.1).is_err());
        assert!(ProbeConfig::new(ProbePattern::StripesAllCells, 0.05, 0.0).is_err());
        let m = min_on_square(0.065);
        assert!((1.0..1.5).contains(&m), "{m}");
    }

    #[test]
    fn stripes_counts_grow_quadratically() {
        let cfg = ProbeConfig::with_pattern(ProbePattern::StripesAllCells);
        let counts: Vec<usize> = [32, 64, 128]
            .iter()
            .map(|&n| probe_nodes(&generate_counterexample_stripes(n).unwrap(), &cfg).unwrap().len())
            .collect();
        assert_eq!(counts, vec![9, 35, 117]);
    }

    #[test]
    fn interface_counts_grow_linearly() {
        let cfg = ProbeConfig::with_pattern(ProbePattern::InterfaceLine);
        let counts: Vec<usize> = [4, 8, 16, 32]
            .iter()
            .map(|&j| probe_nodes(&generate_counterexample_interface(j).unwrap(), &cfg).unwrap().len())
            .collect();
        assert_eq!(counts, vec![3, 5, 9, 17]);
    }

    #[test]
    fn coarse_mesh_has_no_probe_nodes() {
        let cfg = ProbeConfig::with_pattern(ProbePattern::StripesAllCells);
        assert!(probe_vector(&generate_counterexample_stripes(4).unwrap(), &cfg).is_err());
    }

    #[test]
    fn stripes_pattern_on_symmetric_mesh() {
        let cfg = ProbeConfig::with_pattern(ProbePattern::StripesAllCells);
        let mesh = generate_uniform_symmetric(32).unwrap();
        let v = probe_vector(&mesh, &cfg).unwrap();
        for (i, &z) in mesh.interior_vertices().iter().enumerate() {
            let p = mesh.vertex(z);
            let even = ((p.x * 32.0).round() as usize).is_multiple_of(2);
            assert_eq!(v.values()[i] == 1.0, even && cfg.contains(p));
        }
    }
}

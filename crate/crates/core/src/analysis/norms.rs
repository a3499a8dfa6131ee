//! Errors of discrete solutions measured against functions on the domain.

use serde::{Deserialize, Serialize};

use crate::error::{FvemError, Result};
use crate::field::NodalField;
use crate::geometry::{barycentric_gradients, signed_area, Point};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub l2: f64,
    /// `||grad(u_h - u)||`.
    pub h1: f64,
}

/// `||u_h - u||` and `||grad(u_h - u)||` by elementwise quadrature.
pub fn error_norms(
    mesh: &Mesh,
    uh: &NodalField,
    value: &(dyn Fn(Point) -> f64 + Sync),
    gradient: &(dyn Fn(Point) -> Point + Sync),
    rule: &QuadratureRule,
) -> Result<ErrorNorms> {
    uh.check_mesh(mesh)?;
    let nodal = uh.vertex_values(mesh);
    let (mut l2, mut h1) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let u = [nodal[tri[0]], nodal[tri[1]], nodal[tri[2]]];
        let g = barycentric_gradients(&p);
        let grad_h = g[0] * u[0] + g[1] * u[1] + g[2] * u[2];
        for (x, lam, w) in rule.nodes_on(&p) {
            let uh_x = lam[0] * u[0] + lam[1] * u[1] + lam[2] * u[2];
            let e = uh_x - value(x);
            l2 += w * e * e;
            let d = grad_h - gradient(x);
            h1 += w * d.dot(d);
        }
    }
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1: h1.sqrt(),
    })
}

/// Point location by bucketing triangle bounding boxes on a uniform grid.
pub struct PointLocator<'m> {
    mesh: &'m Mesh,
    lo: Point,
    cell: Point,
    cells: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m Mesh) -> PointLocator<'m> {
        let vs = mesh.vertices();
        let (mut lo, mut hi) = (vs[0], vs[0]);
        for v in vs {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let cells = ((mesh.num_triangles() as f64).sqrt().ceil() as usize).max(1);
        let cell = Point::new((hi.x - lo.x) / cells as f64, (hi.y - lo.y) / cells as f64);
        let mut buckets = vec![Vec::new(); cells * cells];
        let mut loc = PointLocator {
            mesh,
            lo,
            cell,
            cells,
            buckets: Vec::new(),
        };
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let (x0, y0) = loc.bucket(Point::new(
                p.iter().map(|q| q.x).fold(f64::INFINITY, f64::min),
                p.iter().map(|q| q.y).fold(f64::INFINITY, f64::min),
            ));
            let (x1, y1) = loc.bucket(Point::new(
                p.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max),
                p.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max),
            ));
            for j in y0..=y1 {
                for i in x0..=x1 {
                    buckets[j * cells + i].push(t);
                }
            }
        }
        loc.buckets = buckets;
        loc
    }

    fn bucket(&self, p: Point) -> (usize, usize) {
        let f = |v: f64, lo: f64, c: f64| (((v - lo) / c).floor().max(0.0) as usize).min(self.cells - 1);
        (f(p.x, self.lo.x, self.cell.x), f(p.y, self.lo.y, self.cell.y))
    }

    /// Triangle containing `p` and the barycentric coordinates of `p`.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.bucket(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.cells + i] {
            let q = self.mesh.triangle_points(t);
            let area = signed_area(q[0], q[1], q[2]);
            let lam = [
                signed_area(p, q[1], q[2]) / area,
                signed_area(q[0], p, q[2]) / area,
                signed_area(q[0], q[1], p) / area,
            ];
            let worst = lam.iter().copied().fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((t, lam, worst));
            }
        }
        best.filter(|b| b.2 >= -1e-10).map(|b| (b.0, b.1))
    }

    /// Value of the piecewise-linear `u_h` at `p`.
    pub fn evaluate(&self, uh: &NodalField, p: Point) -> Result<f64> {
        uh.check_mesh(self.mesh)?;
        let (t, lam) = self
            .locate(p)
            .ok_or_else(|| FvemError::invalid(format!("point ({}, {}) is outside the mesh", p.x, p.y)))?;
        let tri = self.mesh.triangles()[t];
        Ok((0..3)
            .map(|a| {
                let v = tri[a];
                self.mesh.interior_index(v).map_or(0.0, |i| lam[a] * uh.values()[i])
            })
            .sum())
    }

    /// `I_h` on `target` of the piecewise-linear `u_h` on this mesh.
    pub fn transfer(&self, uh: &NodalField, target: &Mesh) -> Result<NodalField> {
        let values = target
            .interior_vertices()
            .iter()
            .map(|&z| self.evaluate(uh, target.vertex(z)))
            .collect::<Result<Vec<_>>>()?;
        NodalField::new(target, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::exact::{EigenSeries, ExactSolution};
    use crate::mesh::{generate_almost_symmetric, generate_uniform_symmetric};
    use crate::operators::Discretization;

    #[test]
    fn linear_functions_are_reproduced() {
        let mesh = generate_almost_symmetric(6, 0.5, 2).unwrap();
        let d = Discretization::laplacian(&mesh).unwrap();
        // The "exact" function is u_h itself, evaluated by point location.
        let u = d.field((0..d.dim()).map(|i| (i as f64).sin()).collect()).unwrap();
        let loc = PointLocator::new(&mesh);
        let rule = QuadratureRule::of_degree(4).unwrap();
        let f = |p: Point| loc.evaluate(&u, p).unwrap();
        let e = error_norms(&mesh, &u, &f, &|_| Point::default(), &rule).unwrap();
        assert!(e.l2 < 1e-13, "{}", e.l2);
        assert!((e.h1 - d.h1_seminorm(&u)).abs() < 1e-12 * d.h1_seminorm(&u));
    }

    #[test]
    fn interpolation_error_has_second_order() {
        let u = EigenSeries::phi11();
        let rule = QuadratureRule::of_degree(5).unwrap();
        let mut prev: Option<ErrorNorms> = None;
        for n in [8, 16, 32] {
            let mesh = generate_uniform_symmetric(n).unwrap();
            let d = Discretization::laplacian(&mesh).unwrap();
            let ih = d.interpolate(&|p| u.value(p, 0.0));
            let e = error_norms(&mesh, &ih, &|p| u.value(p, 0.0), &|p| u.gradient(p, 0.0), &rule).unwrap();
            if let Some(p) = prev {
                assert!(((p.l2 / e.l2).log2() - 2.0).abs() < 0.05);
                assert!(((p.h1 / e.h1).log2() - 1.0).abs() < 0.05);
            }
            prev = Some(e);
        }
    }

    #[test]
    fn locator_transfers_between_nested_meshes() {
        let coarse = generate_uniform_symmetric(4).unwrap();
        let fine = generate_uniform_symmetric(8).unwrap();
        let dc = Discretization::laplacian(&coarse).unwrap();
        let u = dc.interpolate(&|p| p.x * (1.0 - p.x) * p.y);
        let loc = PointLocator::new(&coarse);
        let moved = loc.transfer(&u, &fine).unwrap();
        // Fine vertices that are coarse vertices keep their values.
        for (i, &z) in fine.interior_vertices().iter().enumerate() {
            let p = fine.vertex(z);
            if let Some(j) = coarse
                .interior_vertices()
                .iter()
                .position(|&c| coarse.vertex(c).distance(p) < 1e-12)
            {
                assert!((moved.values()[i] - u.values()[j]).abs() < 1e-14);
            }
        }
        assert!(loc.locate(Point::new(1.5, 0.5)).is_none());
    }
}

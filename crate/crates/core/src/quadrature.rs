//! Symmetric triangle quadrature rules in barycentric coordinates.

use crate::error::{FvemError, Result};
use crate::geometry::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    degree: usize,
    /// Barycentric coordinates of the nodes.
    points: Vec<[f64; 3]>,
    /// Weights summing to one; multiply by the triangle area.
    weights: Vec<f64>,
}

fn orbit3(a: f64, b: f64) -> [[f64; 3]; 3] {
    [[a, b, b], [b, a, b], [b, b, a]]
}

impl QuadratureRule {
    /// The cheapest available rule exact for polynomials of total degree `degree`.
    pub fn of_degree(degree: usize) -> Result<QuadratureRule> {
        let (d, points, weights): (usize, Vec<[f64; 3]>, Vec<f64>) = match degree {
            0 | 1 => (1, vec![[1.0 / 3.0; 3]], vec![1.0]),
            2 => (2, orbit3(2.0 / 3.0, 1.0 / 6.0).to_vec(), vec![1.0 / 3.0; 3]),
            3 | 4 => {
                let (a1, a2) = (0.108_103_018_168_070_23, 0.816_847_572_980_458_5);
                let mut p = orbit3(a1, 0.5 * (1.0 - a1)).to_vec();
                p.extend(orbit3(a2, 0.5 * (1.0 - a2)));
                let mut w = vec![0.223_381_589_678_011_06; 3];
                w.extend([0.109_951_743_655_321_61; 3]);
                (4, p, w)
            }
            5 => {
                let r = 15f64.sqrt();
                let (b1, b2) = ((6.0 + r) / 21.0, (6.0 - r) / 21.0);
                let mut p = vec![[1.0 / 3.0; 3]];
                p.extend(orbit3(1.0 - 2.0 * b1, b1));
                p.extend(orbit3(1.0 - 2.0 * b2, b2));
                let mut w = vec![0.225];
                w.extend([(155.0 + r) / 1200.0; 3]);
                w.extend([(155.0 - r) / 1200.0; 3]);
                (5, p, w)
            }
            _ => {
                return Err(FvemError::invalid(format!(
                    "no triangle rule of degree {degree}; supported degrees are 1 to 5"
                )))
            }
        };
        Ok(QuadratureRule {
            degree: d,
            points,
            weights,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn barycentric(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Physical nodes and area-scaled weights on the triangle `p`.
    pub fn nodes_on(&self, p: &[Point; 3]) -> impl Iterator<Item = (Point, [f64; 3], f64)> + '_ {
        let area = crate::geometry::signed_area(p[0], p[1], p[2]).abs();
        let p = *p;
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
            (x, *l, w * area)
        })
    }

    pub fn integrate(&self, p: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
        self.nodes_on(p).map(|(x, _, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn monomials_integrate_exactly_up_to_degree() {
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        for degree in 1..=5 {
            let rule = QuadratureRule::of_degree(degree).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-14);
            for a in 0..=degree {
                for b in 0..=degree - a {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let got = rule.integrate(&tri, |p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    assert!((got - exact).abs() < 1e-14, "degree {degree}: x^{a} y^{b}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn degree_four_is_not_exact_for_degree_six() {
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let rule = QuadratureRule::of_degree(4).unwrap();
        let exact = factorial(6) / factorial(8);
        assert!((rule.integrate(&tri, |p| p.x.powi(6)) - exact).abs() > 1e-6);
    }

    #[test]
    fn unsupported_degree() {
        assert!(QuadratureRule::of_degree(9).is_err());
        assert_eq!(QuadratureRule::of_degree(3).unwrap().degree(), 4);
    }
}

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Rotation by -90 degrees; the outward normal direction of a CCW boundary edge.
    pub fn rotate_cw(self) -> Point {
        Point::new(self.y, -self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Symmetric 2x2 matrix stored row-major.
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat2_apply(m: &Mat2, v: Point) -> Point {
    Point::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
}

/// Signed area of the triangle (a, b, c); positive when counter-clockwise.
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Shoelace area of a simple polygon given in order.
pub fn polygon_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut twice = 0.0;
    for i in 0..n {
        twice += points[i].cross(points[(i + 1) % n]);
    }
    0.5 * twice
}

pub fn barycenter(p: &[Point; 3]) -> Point {
    Point::new(
        (p[0].x + p[1].x + p[2].x) / 3.0,
        (p[0].y + p[1].y + p[2].y) / 3.0,
    )
}

/// Gradients of the three barycentric coordinate functions of a triangle.
pub fn barycentric_gradients(p: &[Point; 3]) -> [Point; 3] {
    let twice_area = (p[1] - p[0]).cross(p[2] - p[0]);
    let mut g = [Point::default(); 3];
    for (a, ga) in g.iter_mut().enumerate() {
        let e = p[(a + 2) % 3] - p[(a + 1) % 3];
        // grad(lambda_a) is the inward normal of the opposite edge scaled by 1/(2|T|)
        *ga = Point::new(-e.y, e.x) * (1.0 / twice_area);
    }
    g
}

/// Ratio of circumradius to inradius; 2 for an equilateral triangle.
pub fn radius_ratio(p: &[Point; 3]) -> f64 {
    let a = p[1].distance(p[2]);
    let b = p[0].distance(p[2]);
    let c = p[0].distance(p[1]);
    let area = signed_area(p[0], p[1], p[2]).abs();
    if area == 0.0 {
        return f64::INFINITY;
    }
    let circum = a * b * c / (4.0 * area);
    let inradius = 2.0 * area / (a + b + c);
    circum / inradius
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_sum_to_zero_and_reproduce_linears() {
        let p = [Point::new(0.1, 0.0), Point::new(1.0, 0.3), Point::new(0.2, 0.9)];
        let g = barycentric_gradients(&p);
        let s = g[0] + g[1] + g[2];
        assert!(s.norm() < 1e-14);
        // lambda_a(p_b) = delta_ab, so grad(lambda_a) . (p_b - p_c) = delta_ab - delta_ac
        for a in 0..3 {
            let d = g[a].dot(p[(a + 1) % 3] - p[a]);
            assert!((d + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn equilateral_radius_ratio_is_two() {
        let p = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 3f64.sqrt() / 2.0),
        ];
        assert!((radius_ratio(&p) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn right_isosceles_radius_ratio() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!((radius_ratio(&p) - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }
}

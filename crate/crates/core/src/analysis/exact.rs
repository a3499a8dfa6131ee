//! Closed-form solutions on the unit square.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// A solution `u(x, t)` of `u_t + A u = 0` with zero boundary values.
pub trait ExactSolution: Send + Sync {
    fn value(&self, p: Point, t: f64) -> f64;
    fn gradient(&self, p: Point, t: f64) -> Point;
    /// `A u(., t)`, the right-hand side of the elliptic projection.
    fn operator_image(&self, p: Point, t: f64) -> f64;

    /// Initial data `v = u(., 0)`.
    fn initial(&self, p: Point) -> f64 {
        self.value(p, 0.0)
    }
}

/// Truncated expansion in the Dirichlet Laplacian eigenfunctions
/// `phi_mn = 2 sin(m pi x) sin(n pi y)`, `lambda_mn = (m^2 + n^2) pi^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSeries {
    pub terms: Vec<(u32, u32, f64)>,
}

pub fn laplace_eigenvalue(m: u32, n: u32) -> f64 {
    ((m * m + n * n) as f64) * PI * PI
}

pub fn phi(m: u32, n: u32, p: Point) -> f64 {
    2.0 * (m as f64 * PI * p.x).sin() * (n as f64 * PI * p.y).sin()
}

impl EigenSeries {
    pub fn single(m: u32, n: u32, c: f64) -> EigenSeries {
        EigenSeries { terms: vec![(m, n, c)] }
    }

    /// `phi_11 = 2 sin(pi x) sin(pi y)`.
    pub fn phi11() -> EigenSeries {
        EigenSeries::single(1, 1, 1.0)
    }

    /// `|u(t)|_q = (sum lambda^q c^2 e^{-2 lambda t})^(1/2)`.
    pub fn seminorm(&self, q: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, n, c)| {
                let l = laplace_eigenvalue(m, n);
                l.powf(q) * (c * (-l * t).exp()).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Terms whose contribution at time `t` is at least `rel_tol` times the
    /// largest one.
    pub fn pruned(&self, t: f64, rel_tol: f64) -> EigenSeries {
        let size = |&(m, n, c): &(u32, u32, f64)| c.abs() * (-laplace_eigenvalue(m, n) * t).exp();
        let max = self.terms.iter().map(size).fold(0.0, f64::max);
        EigenSeries {
            terms: self.terms.iter().copied().filter(|term| size(term) >= rel_tol * max).collect(),
        }
    }

    /// Random coefficients for all `m, n <= order`, seeded.
    pub fn random(order: u32, seed: u64) -> EigenSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for m in 1..=order {
            for n in 1..=order {
                terms.push((m, n, rng.random::<f64>() - 0.5));
            }
        }
        EigenSeries { terms }
    }
}

impl ExactSolution for EigenSeries {
    fn value(&self, p: Point, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, n, c)| c * (-laplace_eigenvalue(m, n) * t).exp() * phi(m, n, p))
            .sum()
    }

    fn gradient(&self, p: Point, t: f64) -> Point {
        self.terms.iter().fold(Point::default(), |acc, &(m, n, c)| {
            let (a, b) = (m as f64 * PI, n as f64 * PI);
            let s = 2.0 * c * (-laplace_eigenvalue(m, n) * t).exp();
            acc + Point::new(
                s * a * (a * p.x).cos() * (b * p.y).sin(),
                s * b * (a * p.x).sin() * (b * p.y).cos(),
            )
        })
    }

    fn operator_image(&self, p: Point, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, n, c)| {
                let l = laplace_eigenvalue(m, n);
                l * c * (-l * t).exp() * phi(m, n, p)
            })
            .sum()
    }
}

/// `T(x) T(y)` with the tent `T(s) = min(s, 1 - s)`: in H^1_0 but not in
/// H^2, so it is mildly nonsmooth initial data. For `t > 0` the solution is
/// its eigen-expansion, truncated where `exp(-lambda t)` underflows the
/// coefficients.
#[derive(Clone, Debug)]
pub struct TentProduct {
    series: EigenSeries,
}

fn tent(s: f64) -> f64 {
    s.min(1.0 - s)
}

fn tent_slope(s: f64) -> f64 {
    if s < 0.5 {
        1.0
    } else {
        -1.0
    }
}

impl TentProduct {
    /// Series with odd `m, n <= order`.
    pub fn new(order: u32) -> TentProduct {
        let mut terms = Vec::new();
        for m in (1..=order).step_by(2) {
            for n in (1..=order).step_by(2) {
                let s = (m as f64 * PI / 2.0).sin() * (n as f64 * PI / 2.0).sin();
                let c = 8.0 * s / ((m * m * n * n) as f64 * PI.powi(4));
                terms.push((m, n, c));
            }
        }
        TentProduct {
            series: EigenSeries { terms },
        }
    }

    pub fn series(&self) -> &EigenSeries {
        &self.series
    }

    /// The same function with the series pruned for evaluation at times `>= t`.
    pub fn pruned(&self, t: f64, rel_tol: f64) -> TentProduct {
        TentProduct {
            series: self.series.pruned(t, rel_tol),
        }
    }

    /// `|v|_1 = ||grad v|| = 1/sqrt(6)`.
    pub fn h1_seminorm() -> f64 {
        1.0 / 6f64.sqrt()
    }
}

impl Default for TentProduct {
    fn default() -> Self {
        TentProduct::new(199)
    }
}

impl ExactSolution for TentProduct {
    fn value(&self, p: Point, t: f64) -> f64 {
        if t == 0.0 {
            self.initial(p)
        } else {
            self.series.value(p, t)
        }
    }

    fn gradient(&self, p: Point, t: f64) -> Point {
        if t == 0.0 {
            Point::new(tent_slope(p.x) * tent(p.y), tent(p.x) * tent_slope(p.y))
        } else {
            self.series.gradient(p, t)
        }
    }

    fn operator_image(&self, p: Point, t: f64) -> f64 {
        self.series.operator_image(p, t)
    }

    fn initial(&self, p: Point) -> f64 {
        tent(p.x) * tent(p.y)
    }
}

/// Eigenfunctions of `A = -div(diag((1+x)^2, (1+y)^2) grad) + beta0`:
/// `X_m(x) = (1+x)^{-1/2} sin(mu_m ln(1+x))`, `mu_m = m pi / ln 2`, with
/// eigenvalue `mu_m^2 + mu_n^2 + 1/2 + beta0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerSeparable {
    pub beta0: f64,
    pub terms: Vec<(u32, u32, f64)>,
}

impl EulerSeparable {
    pub fn single(m: u32, n: u32, beta0: f64) -> EulerSeparable {
        EulerSeparable {
            beta0,
            terms: vec![(m, n, 1.0)],
        }
    }

    fn mu(m: u32) -> f64 {
        m as f64 * PI / 2f64.ln()
    }

    pub fn eigenvalue(&self, m: u32, n: u32) -> f64 {
        Self::mu(m).powi(2) + Self::mu(n).powi(2) + 0.5 + self.beta0
    }

    fn factor(m: u32, s: f64) -> (f64, f64) {
        let mu = Self::mu(m);
        let l = (1.0 + s).ln();
        let (sn, cs) = (mu * l).sin_cos();
        let v = sn / (1.0 + s).sqrt();
        let d = (-0.5 * sn + mu * cs) / (1.0 + s).powf(1.5);
        (v, d)
    }
}

impl ExactSolution for EulerSeparable {
    fn value(&self, p: Point, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, n, c)| c * (-self.eigenvalue(m, n) * t).exp() * Self::factor(m, p.x).0 * Self::factor(n, p.y).0)
            .sum()
    }

    fn gradient(&self, p: Point, t: f64) -> Point {
        self.terms.iter().fold(Point::default(), |acc, &(m, n, c)| {
            let s = c * (-self.eigenvalue(m, n) * t).exp();
            let (xv, xd) = Self::factor(m, p.x);
            let (yv, yd) = Self::factor(n, p.y);
            acc + Point::new(s * xd * yv, s * xv * yd)
        })
    }

    fn operator_image(&self, p: Point, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, n, c)| {
                let l = self.eigenvalue(m, n);
                l * c * (-l * t).exp() * Self::factor(m, p.x).0 * Self::factor(n, p.y).0
            })
            .sum()
    }
}

/// Piecewise-constant data on a `cells x cells` grid with seeded values in
/// `[-1, 1)`; only in L2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomL2 {
    pub cells: usize,
    pub values: Vec<f64>,
}

impl RandomL2 {
    pub fn new(cells: usize, seed: u64) -> RandomL2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RandomL2 {
            cells,
            values: (0..cells * cells).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect(),
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        let c = self.cells;
        let i = ((p.x * c as f64).floor() as usize).min(c - 1);
        let j = ((p.y * c as f64).floor() as usize).min(c - 1);
        self.values[j * c + i]
    }

    /// `||v||^2 = mean of the squared cell values`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

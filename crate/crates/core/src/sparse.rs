//! Compressed-row matrices over interior degrees of freedom and a
//! Jacobi-preconditioned conjugate gradient solver.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FvemError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets.
    ///
    /// Duplicates are summed in insertion order, so two entries that receive
    /// the same contributions in the same order are bitwise equal.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&e| (triplets[e].0, triplets[e].1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for e in order {
            let (i, j, v) = triplets[e];
            assert!(i < n && j < n, "triplet ({i}, {j}) outside a {n}x{n} matrix");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(n: usize) -> CsrMatrix {
        CsrMatrix::from_triplets(n, &[])
    }

    pub fn diagonal_matrix(diag: &[f64]) -> CsrMatrix {
        let t: Vec<_> = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        CsrMatrix::from_triplets(diag.len(), &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise difference `max |A_ij - B_ij|` over the union of patterns.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            for (&j, &a) in ca.iter().zip(va) {
                worst = worst.max((a - other.get(i, j)).abs());
            }
            for (&j, &b) in cb.iter().zip(vb) {
                if ca.binary_search(&j).is_err() {
                    worst = worst.max(b.abs());
                }
            }
        }
        worst
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() == 0.0
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, s * v)));
        CsrMatrix::from_triplets(self.n, &t)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            t.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
        }
        t
    }

    /// `y^T A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        dot(y, &self.mul_vec(x))
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Coordinate text dump, one `i j value` line per stored entry.
    pub fn write_coordinate(&self) -> String {
        let mut out = String::new();
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:?}").unwrap();
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a * x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    /// Stop when `||b - Ax|| <= rel_tol * ||b||`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSummary {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned CG for SPD `a`. `x` holds the initial guess on entry.
pub fn solve_pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &CgOptions) -> Result<CgSummary> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgSummary {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r: Vec<f64> = b.iter().zip(a.mul_vec(x)).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = opts.rel_tol * b_norm;
    let mut res = norm2(&r);
    for it in 0..opts.max_iter {
        if res <= target {
            return Ok(CgSummary {
                iterations: it,
                relative_residual: res / b_norm,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FvemError::numerical(
                "conjugate gradient breakdown: matrix is not positive definite",
                res / b_norm,
            ));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        res = norm2(&r);
    }
    if res <= target {
        return Ok(CgSummary {
            iterations: opts.max_iter,
            relative_residual: res / b_norm,
        });
    }
    Err(FvemError::numerical(
        format!("conjugate gradient did not converge in {} iterations", opts.max_iter),
        res / b_norm,
    ))
}

/// Solves `a x = b` from a zero initial guess.
pub fn solve(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<Vec<f64>> {
    let mut x = vec![0.0; b.len()];
    solve_pcg(a, b, &mut x, opts)?;
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (0, 1, 2.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 3);
        assert!(m.is_symmetric());
        assert_eq!(m.row_sums(), vec![6.0, 2.0]);
    }

    #[test]
    fn cg_solves_tridiagonal() {
        let a = laplace_1d(50);
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = solve(&a, &b, &CgOptions::default()).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn cg_reports_non_convergence_with_residual() {
        let a = laplace_1d(200);
        let b = vec![1.0; 200];
        let opts = CgOptions {
            rel_tol: 1e-12,
            max_iter: 3,
        };
        match solve(&a, &b, &opts) {
            Err(FvemError::Numerical { residual, .. }) => assert!(residual > 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coordinate_dump_lists_entries() {
        let m = CsrMatrix::from_triplets(2, &[(0, 1, 0.5), (1, 0, 0.5)]);
        assert_eq!(m.write_coordinate(), "0 1 0.5\n1 0 0.5\n");
    }

    proptest! {
        #[test]
        fn triplet_order_does_not_change_pattern(seed in 0u64..1000) {
            let mut t: Vec<(usize, usize, f64)> = (0..30)
                .map(|k| ((k * 7 + seed as usize) % 5, (k * 3) % 5, k as f64 + 0.25))
                .collect();
            let a = CsrMatrix::from_triplets(5, &t);
            t.reverse();
            let b = CsrMatrix::from_triplets(5, &t);
            prop_assert!(a.max_abs_diff(&b) <= 1e-12);
        }

        #[test]
        fn add_scaled_is_linear(s in -3.0f64..3.0) {
            let a = laplace_1d(6);
            let c = a.add_scaled(s, &a);
            prop_assert!(c.max_abs_diff(&a.scaled(1.0 + s)) <= 1e-14);
        }
    }
}

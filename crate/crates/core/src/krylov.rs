//! Lanczos process in a matrix-induced inner product.
//!
//! The operators of interest (`M~^-1 S`, shift-inverted pencils, the normal
//! operator of `Q_h`) are self-adjoint in an inner product `<x, y>_G = x^T G y`
//! with `G` a mass matrix. The basis is kept `G`-orthonormal with full
//! reorthogonalization, so the small tridiagonal matrix is the exact
//! projection up to rounding.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::Result;
use crate::sparse::{axpy, dot, CsrMatrix};

pub struct Lanczos<'g> {
    metric: &'g CsrMatrix,
    basis: Vec<Vec<f64>>,
    /// `G v_j` for every basis vector.
    metric_basis: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    start_norm: f64,
    exhausted: bool,
}

impl<'g> Lanczos<'g> {
    /// Starts from `v0`, which must be nonzero in the `G`-norm.
    pub fn new(metric: &'g CsrMatrix, v0: &[f64]) -> Lanczos<'g> {
        let gv = metric.mul_vec(v0);
        let norm = dot(v0, &gv).sqrt();
        let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        Lanczos {
            metric,
            basis: vec![v0.iter().map(|x| x * inv).collect()],
            metric_basis: vec![gv.iter().map(|x| x * inv).collect()],
            alpha: Vec::new(),
            beta: Vec::new(),
            start_norm: norm,
            exhausted: norm == 0.0,
        }
    }

    /// `G`-norm of the starting vector.
    pub fn start_norm(&self) -> f64 {
        self.start_norm
    }

    /// Number of completed steps, i.e. the size of the tridiagonal matrix.
    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    /// True once an invariant subspace has been found.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis[..self.steps()]
    }

    /// One step with operator `apply`, which must be `G`-self-adjoint.
    pub fn step(&mut self, apply: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<()> {
        if self.exhausted {
            return Ok(());
        }
        let j = self.alpha.len();
        let mut w = apply(&self.basis[j])?;
        let a = dot(&w, &self.metric_basis[j]);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for (v, gv) in self.basis.iter().zip(&self.metric_basis) {
                let c = dot(&w, gv);
                axpy(-c, v, &mut w);
            }
        }
        self.alpha.push(a);
        let gw = self.metric.mul_vec(&w);
        let b = dot(&w, &gw).max(0.0).sqrt();
        let scale = self.alpha.iter().chain(&self.beta).fold(0.0f64, |m, x| m.max(x.abs()));
        if b <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            self.exhausted = true;
            return Ok(());
        }
        self.beta.push(b);
        self.basis.push(w.iter().map(|x| x / b).collect());
        self.metric_basis.push(gw.iter().map(|x| x / b).collect());
        Ok(())
    }

    /// Eigen-decomposition of the current tridiagonal matrix, ascending.
    pub fn ritz(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let m = self.steps();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        t.symmetric_eigen()
    }

    /// Coupling to the next basis vector, used in Ritz residual estimates.
    pub fn next_beta(&self) -> f64 {
        if self.exhausted {
            0.0
        } else {
            self.beta.get(self.steps() - 1).copied().unwrap_or(0.0)
        }
    }

    /// `start_norm * V f(T) e_1` for a scalar function `f` of the Ritz values.
    pub fn function_coefficients(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let eig = self.ritz();
        let m = self.steps();
        let mut y = vec![0.0; m];
        for (k, &theta) in eig.eigenvalues.iter().enumerate() {
            let weight = f(theta) * eig.eigenvectors[(0, k)];
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += weight * eig.eigenvectors[(i, k)];
            }
        }
        y.iter().map(|v| v * self.start_norm).collect()
    }

    /// `sum_i y_i v_i`.
    pub fn combine(&self, y: &[f64]) -> Vec<f64> {
        let n = self.basis[0].len();
        let mut out = vec![0.0; n];
        for (yi, v) in y.iter().zip(&self.basis) {
            axpy(*yi, v, &mut out);
        }
        out
    }
}

/// Sorted eigen-decomposition helper: ascending values with their vectors.
pub fn sorted_eigen(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> Vec<(f64, Vec<f64>)> {
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &v)| (v, eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

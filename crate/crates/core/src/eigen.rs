//! Generalized eigenpairs of the pencil `(K, M~)`: `K phi = lambda M~ phi`,
//! with eigenvectors orthonormal in the FV inner product.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FvemError, Result};
use crate::field::NodalField;
use crate::krylov::sorted_eigen;
use crate::sparse::{axpy, dot, norm2, solve_pcg, CgOptions, CsrMatrix};

/// Largest problem solved with the dense method.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenCount {
    All,
    Smallest(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenDecomposition {
    mesh_id: u64,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvalues in increasing order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, j: usize) -> NodalField {
        NodalField::from_raw(self.mesh_id, self.vectors[j].clone())
    }

    /// Keeps the `k` smallest pairs.
    pub fn truncate(&mut self, k: usize) {
        self.values.truncate(k);
        self.vectors.truncate(k);
    }

    pub fn raw_vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    /// Largest `||K phi - lambda M~ phi|| / (lambda ||M~ phi||)` over all pairs.
    pub fn max_relative_residual(&self, k: &CsrMatrix, fv_mass: &CsrMatrix) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&l, v)| {
                let kv = k.mul_vec(v);
                let mv = fv_mass.mul_vec(v);
                let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - l * b).collect();
                norm2(&r) / (l.abs() * norm2(&mv))
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|<phi_i, phi_j> - delta_ij|`.
    pub fn max_orthonormality_defect(&self, fv_mass: &CsrMatrix) -> f64 {
        let mv: Vec<Vec<f64>> = self.vectors.iter().map(|v| fv_mass.mul_vec(v)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in i..self.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&self.vectors[i], &mv[j]) - target).abs());
            }
        }
        worst
    }
}

fn normalize_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    let n = a.dim();
    let mut d = DMatrix::zeros(n, n);
    for (i, j, v) in a.triplets() {
        d[(i, j)] = v;
    }
    d
}

/// All eigenpairs by Cholesky reduction to a standard symmetric problem.
pub fn dense_generalized_eigen(mesh_id: u64, k: &CsrMatrix, m: &CsrMatrix) -> Result<EigenDecomposition> {
    let n = k.dim();
    if n > DENSE_EIGEN_LIMIT {
        return Err(FvemError::invalid(format!(
            "dense eigen-decomposition limited to {DENSE_EIGEN_LIMIT} unknowns, got {n}"
        )));
    }
    if n == 0 {
        return Ok(EigenDecomposition {
            mesh_id,
            values: vec![],
            vectors: vec![],
        });
    }
    let chol = dense(m)
        .cholesky()
        .ok_or_else(|| FvemError::numerical("mass matrix is not positive definite", f64::NAN))?;
    let l = chol.l();
    let kd = dense(k);
    let x = l
        .solve_lower_triangular(&kd)
        .ok_or_else(|| FvemError::numerical("singular Cholesky factor", f64::NAN))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| FvemError::numerical("singular Cholesky factor", f64::NAN))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let lt = l.transpose();
    let mut pairs: Vec<(f64, Vec<f64>)> = sorted_eigen(&eig)
        .into_iter()
        .map(|(val, q)| {
            let q = DMatrix::from_column_slice(n, 1, &q);
            let v = lt.solve_upper_triangular(&q).expect("nonsingular factor");
            (val, v.iter().copied().collect())
        })
        .collect();
    for (_, v) in pairs.iter_mut() {
        normalize_sign(v);
    }
    Ok(EigenDecomposition {
        mesh_id,
        values: pairs.iter().map(|p| p.0).collect(),
        vectors: pairs.into_iter().map(|p| p.1).collect(),
    })
}

/// The `count` smallest eigenpairs by block inverse iteration on `K^-1 M~`
/// with Rayleigh-Ritz extraction; a block (rather than a single Krylov
/// vector) resolves repeated eigenvalues.
pub fn smallest_eigenpairs(
    mesh_id: u64,
    k: &CsrMatrix,
    m: &CsrMatrix,
    count: usize,
    cg: &CgOptions,
    tol: f64,
) -> Result<EigenDecomposition> {
    let n = k.dim();
    let count = count.min(n);
    let p = (count + 10).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut block: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        let mut next = Vec::with_capacity(p);
        for x in &block {
            let rhs = m.mul_vec(x);
            let mut y = x.clone();
            solve_pcg(k, &rhs, &mut y, cg)?;
            next.push(y);
        }
        m_orthonormalize(&mut next, m);
        let kv: Vec<Vec<f64>> = next.iter().map(|y| k.mul_vec(y)).collect();
        let q = next.len();
        let mut small = DMatrix::zeros(q, q);
        for i in 0..q {
            for j in i..q {
                let v = 0.5 * (dot(&next[i], &kv[j]) + dot(&next[j], &kv[i]));
                small[(i, j)] = v;
                small[(j, i)] = v;
            }
        }
        let pairs = sorted_eigen(&small.symmetric_eigen());
        block = pairs
            .iter()
            .map(|(_, s)| {
                let mut v = vec![0.0; n];
                for (c, y) in s.iter().zip(&next) {
                    axpy(*c, y, &mut v);
                }
                v
            })
            .collect();
        worst = 0.0;
        for ((lambda, _), v) in pairs.iter().zip(&block).take(count) {
            let kv = k.mul_vec(v);
            let mv = m.mul_vec(v);
            let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect();
            worst = worst.max(norm2(&r) / (lambda * norm2(&mv)));
        }
        if worst <= tol && block.len() >= count {
            let values = pairs.iter().take(count).map(|p| p.0).collect();
            let mut vectors: Vec<Vec<f64>> = block.into_iter().take(count).collect();
            vectors.iter_mut().for_each(|v| normalize_sign(v));
            return Ok(EigenDecomposition { mesh_id, values, vectors });
        }
    }
    Err(FvemError::numerical(
        format!("block inverse iteration did not resolve {count} eigenpairs"),
        worst,
    ))
}

/// Two passes of modified Gram-Schmidt in the `M` inner product; dependent
/// vectors are dropped.
fn m_orthonormalize(vs: &mut Vec<Vec<f64>>, m: &CsrMatrix) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    let mut m_out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        let n0 = dot(&v, &m.mul_vec(&v)).sqrt();
        for _ in 0..2 {
            for (u, mu) in out.iter().zip(&m_out) {
                let c = dot(&v, mu);
                axpy(-c, u, &mut v);
            }
        }
        let mv = m.mul_vec(&v);
        let nrm = dot(&v, &mv).sqrt();
        if nrm > 1e-10 * n0 {
            out.push(v.iter().map(|x| x / nrm).collect());
            m_out.push(mv.iter().map(|x| x / nrm).collect());
        }
    }
    *vs = out;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{fv_mass_matrix, stiffness_matrix};
    use crate::mesh::generate_uniform_symmetric;

    #[test]
    fn dense_pairs_satisfy_contract() {
        let mesh = generate_uniform_symmetric(8).unwrap();
        let k = stiffness_matrix(&mesh, None).unwrap();
        let m = fv_mass_matrix(&mesh);
        let e = dense_generalized_eigen(mesh.id(), &k, &m).unwrap();
        assert_eq!(e.len(), 49);
        assert!(e.values().windows(2).all(|w| w[0] <= w[1]));
        assert!(e.values()[0] > 0.0);
        assert!(e.max_relative_residual(&k, &m) < 1e-10);
        assert!(e.max_orthonormality_defect(&m) < 1e-10);
        let v = &e.raw_vectors()[0];
        assert!(v.iter().find(|x| x.abs() > 1e-12).unwrap() > &0.0);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let mesh = generate_uniform_symmetric(12).unwrap();
        let k = stiffness_matrix(&mesh, None).unwrap();
        let m = fv_mass_matrix(&mesh);
        let dense = dense_generalized_eigen(mesh.id(), &k, &m).unwrap();
        let part = smallest_eigenpairs(mesh.id(), &k, &m, 5, &CgOptions::default(), 1e-10).unwrap();
        for j in 0..5 {
            assert!((part.values()[j] - dense.values()[j]).abs() < 1e-9 * dense.values()[j]);
        }
        assert!(part.max_relative_residual(&k, &m) < 1e-10);
        assert!(part.max_orthonormality_defect(&m) < 1e-10);
        // Simple first eigenvalue: vectors agree up to sign convention.
        let d: f64 = part.raw_vectors()[0]
            .iter()
            .zip(&dense.raw_vectors()[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-7, "{d}");
    }
}

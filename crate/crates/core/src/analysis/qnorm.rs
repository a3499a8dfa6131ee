//! Operator norm of `Q_h` in L2.
//!
//! `||Q_h||^2` is the largest eigenvalue of `Q_h^* Q_h = M^-1 D K^-1 M K^-1 D`
//! (`D = M~ - M`), which is self-adjoint in the mass inner product. Lanczos
//! in that inner product converges to it much faster than plain power
//! iteration on the same operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::krylov::Lanczos;
use crate::operators::Discretization;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnormOptions {
    /// Relative Ritz residual at which the top eigenvalue is accepted.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for QnormOptions {
    fn default() -> Self {
        QnormOptions {
            tol: 1e-8,
            max_iter: 200,
            seed: 7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnormEstimate {
    /// Estimate of `sup ||Q_h psi|| / ||psi||`.
    pub value: f64,
    pub iterations: usize,
    /// False if `max_iter` was reached first; `value` is then the best
    /// (lower-bound) estimate so far.
    pub converged: bool,
}

pub fn qh_norm_estimate(disc: &Discretization, opts: &QnormOptions) -> Result<QnormEstimate> {
    let n = disc.dim();
    if n == 0 {
        return Ok(QnormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let v0: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let (mass, diff, k) = (disc.mass(), disc.difference(), disc.stiffness());
    let mut apply = |x: &[f64]| -> Result<Vec<f64>> {
        let q = disc.solve(k, &diff.mul_vec(x))?;
        let r = disc.solve(k, &mass.mul_vec(&q))?;
        disc.solve_mass(mass, &diff.mul_vec(&r))
    };
    let mut lz = Lanczos::new(mass, &v0);
    let mut value = 0.0;
    while lz.steps() < opts.max_iter.min(n) && !lz.exhausted() {
        lz.step(&mut apply)?;
        let eig = lz.ritz();
        let (top, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one Ritz value");
        value = theta.max(0.0);
        let last = eig.eigenvectors[(lz.steps() - 1, top)].abs();
        if lz.exhausted() || lz.next_beta() * last <= opts.tol * theta {
            return Ok(QnormEstimate {
                value: value.sqrt(),
                iterations: lz.steps(),
                converged: true,
            });
        }
    }
    let converged = lz.exhausted();
    if !converged {
        log::warn!("Q_h norm estimate did not converge in {} iterations", lz.steps());
    }
    Ok(QnormEstimate {
        value: value.sqrt(),
        iterations: lz.steps(),
        converged,
    })
}

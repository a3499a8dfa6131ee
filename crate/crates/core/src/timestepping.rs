//! Semidiscrete propagation `E~_h(t) = exp(t Delta~_h)` and the fully
//! discrete backward Euler and Crank-Nicolson schemes. All routines use the
//! discretization's stiffness `K`, so the Laplacian and the general
//! operator share one code path.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::eigen::{EigenCount, EigenDecomposition, DENSE_EIGEN_LIMIT};
use crate::error::{FvemError, Result};
use crate::field::NodalField;
use crate::krylov::Lanczos;
use crate::operators::Discretization;
use crate::sparse::{axpy, dot, norm2, solve_pcg, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationMethod {
    /// Eigen up to the dense limit, Krylov above it.
    Auto,
    /// Exact modal sum over all eigenpairs.
    Eigen,
    /// Shift-and-invert Lanczos approximation of the exponential.
    Krylov,
    /// Crank-Nicolson with step halving until the result settles.
    Substep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    pub method: PropagationMethod,
    /// Relative L2 change between successive halvings that stops substep mode.
    pub substep_tol: f64,
    pub initial_substeps: usize,
    pub max_substeps: usize,
    /// Relative change between successive Krylov iterates that stops Krylov mode.
    pub krylov_tol: f64,
    pub max_krylov_dim: usize,
    pub dense_limit: usize,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            method: PropagationMethod::Auto,
            substep_tol: 1e-8,
            initial_substeps: 16,
            max_substeps: 1 << 20,
            krylov_tol: 1e-11,
            max_krylov_dim: 300,
            dense_limit: DENSE_EIGEN_LIMIT,
        }
    }
}

impl PropagatorOptions {
    pub fn with_method(method: PropagationMethod) -> Self {
        PropagatorOptions {
            method,
            ..Default::default()
        }
    }
}

pub struct Propagator<'d, 'm> {
    disc: &'d Discretization<'m>,
    opts: PropagatorOptions,
    eigen: OnceLock<EigenDecomposition>,
}

impl<'d, 'm> Propagator<'d, 'm> {
    pub fn new(disc: &'d Discretization<'m>, opts: PropagatorOptions) -> Self {
        Propagator {
            disc,
            opts,
            eigen: OnceLock::new(),
        }
    }

    pub fn options(&self) -> &PropagatorOptions {
        &self.opts
    }

    pub fn discretization(&self) -> &'d Discretization<'m> {
        self.disc
    }

    /// Uses an existing decomposition for eigen mode.
    pub fn with_eigen(self, eig: EigenDecomposition) -> Self {
        let _ = self.eigen.set(eig);
        self
    }

    /// The method actually used for this problem size.
    pub fn effective_method(&self) -> PropagationMethod {
        let small = self.disc.dim() <= self.opts.dense_limit;
        match self.opts.method {
            PropagationMethod::Auto if small => PropagationMethod::Eigen,
            PropagationMethod::Auto => PropagationMethod::Krylov,
            PropagationMethod::Eigen if !small && self.eigen.get().is_none() => PropagationMethod::Substep,
            m => m,
        }
    }

    pub fn eigen(&self) -> Result<&EigenDecomposition> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = self.disc.eigendecompose(EigenCount::All)?;
        Ok(self.eigen.get_or_init(|| e))
    }

    /// `E~_h(t) v`.
    pub fn propagate(&self, v: &NodalField, t: f64) -> Result<NodalField> {
        v.check_mesh(self.disc.mesh())?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(FvemError::invalid(format!("propagation time must be nonnegative, got {t}")));
        }
        if t == 0.0 {
            return Ok(v.clone());
        }
        let method = self.effective_method();
        if self.opts.method == PropagationMethod::Eigen && method == PropagationMethod::Substep {
            log::warn!(
                "eigen propagation unavailable for {} unknowns (limit {}); using substep mode",
                self.disc.dim(),
                self.opts.dense_limit
            );
        }
        let values = match method {
            PropagationMethod::Eigen => self.modal(v.values(), t)?,
            PropagationMethod::Krylov => self.krylov(v.values(), t)?,
            PropagationMethod::Substep => self.substep(v, t)?,
            PropagationMethod::Auto => unreachable!(),
        };
        Ok(NodalField::from_raw(v.mesh_id(), values))
    }

    fn modal(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        let eig = self.eigen()?;
        let mv = self.disc.fv_mass().mul_vec(v);
        let mut out = vec![0.0; v.len()];
        for (&lambda, phi) in eig.values().iter().zip(eig.raw_vectors()) {
            let c = dot(phi, &mv) * (-lambda * t).exp();
            axpy(c, phi, &mut out);
        }
        Ok(out)
    }

    /// Lanczos on `B = (M~ + gK)^-1 M~`, self-adjoint in the FV inner product,
    /// with `exp(-tA)` evaluated through `A = (B^-1 - I)/g` on the Ritz values.
    fn krylov(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        let g = t / 10.0;
        let fv = self.disc.fv_mass();
        let shifted = fv.add_scaled(g, self.disc.stiffness());
        let cg = *self.disc.cg_options();
        let mut lz = Lanczos::new(fv, v);
        if lz.start_norm() == 0.0 {
            return Ok(vec![0.0; v.len()]);
        }
        let mut apply = |x: &[f64]| -> Result<Vec<f64>> {
            let rhs = fv.mul_vec(x);
            let mut y = x.to_vec();
            solve_pcg(&shifted, &rhs, &mut y, &cg)?;
            Ok(y)
        };
        let f = |theta: f64| if theta > 0.0 { (-t * (1.0 / theta - 1.0) / g).exp() } else { 0.0 };
        let mut previous: Vec<f64> = Vec::new();
        let mut settled = 0;
        let mut change = f64::INFINITY;
        while lz.steps() < self.opts.max_krylov_dim.min(v.len()) && !lz.exhausted() {
            lz.step(&mut apply)?;
            let y = lz.function_coefficients(f);
            let diff: f64 = y
                .iter()
                .enumerate()
                .map(|(i, yi)| (yi - previous.get(i).copied().unwrap_or(0.0)).powi(2))
                .sum::<f64>()
                .sqrt();
            change = diff / norm2(&y).max(f64::MIN_POSITIVE);
            previous = y;
            settled = if change <= self.opts.krylov_tol { settled + 1 } else { 0 };
            if settled >= 2 {
                break;
            }
        }
        if settled < 2 && !lz.exhausted() && lz.steps() < v.len() {
            return Err(FvemError::numerical(
                format!("Krylov propagation did not settle in {} steps", lz.steps()),
                change,
            ));
        }
        Ok(lz.combine(&previous))
    }

    fn substep(&self, v: &NodalField, t: f64) -> Result<Vec<f64>> {
        let mass = self.disc.mass();
        let mut n = self.opts.initial_substeps.max(1);
        let mut previous = crank_nicolson(self.disc, v, &TimeGrid::new(t, n)?, 0, Storage::FinalOnly)?.final_field;
        let mut change = f64::INFINITY;
        while 2 * n <= self.opts.max_substeps {
            n *= 2;
            let next = crank_nicolson(self.disc, v, &TimeGrid::new(t, n)?, 0, Storage::FinalOnly)?.final_field;
            let d: Vec<f64> = next.values().iter().zip(previous.values()).map(|(a, b)| a - b).collect();
            let denom = mass.quad_form(next.values()).sqrt();
            change = mass.quad_form(&d).sqrt() / denom.max(f64::MIN_POSITIVE);
            previous = next;
            if change <= self.opts.substep_tol {
                log::debug!("substep propagation settled with {n} steps (change {change:.2e})");
                return Ok(previous.into_values());
            }
        }
        Err(FvemError::numerical(
            format!("substep propagation did not reach {:.1e} within {} steps", self.opts.substep_tol, n),
            change,
        ))
    }
}

/// Uniform time grid `t_n = n k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    k: f64,
    steps: usize,
}

impl TimeGrid {
    /// `steps` equal steps up to `t_final`.
    pub fn new(t_final: f64, steps: usize) -> Result<TimeGrid> {
        if !(t_final > 0.0 && t_final.is_finite()) || steps == 0 {
            return Err(FvemError::invalid(format!(
                "time grid needs t > 0 and at least one step, got t = {t_final}, n = {steps}"
            )));
        }
        Ok(TimeGrid {
            k: t_final / steps as f64,
            steps,
        })
    }

    /// Steps of size `k` reaching `t_final`; `t_final` must be a multiple of `k`.
    pub fn from_step(t_final: f64, k: f64) -> Result<TimeGrid> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(FvemError::invalid(format!("time step must be positive, got {k}")));
        }
        let n = (t_final / k).round();
        if n < 1.0 || (n * k - t_final).abs() > 1e-14 * t_final.abs().max(1.0) {
            return Err(FvemError::invalid(format!(
                "final time {t_final} is not an integer multiple of the step {k}"
            )));
        }
        Ok(TimeGrid { k, steps: n as usize })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.k
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Storage {
    FinalOnly,
    Full,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub final_field: NodalField,
    /// `U^0, ..., U^N` when stored, otherwise empty.
    pub trajectory: Vec<NodalField>,
}

struct Stepper {
    lhs: CsrMatrix,
    rhs: CsrMatrix,
}

impl Stepper {
    /// `(M~ + theta k K) U^n = (M~ - (1 - theta) k K) U^{n-1}`.
    fn new(disc: &Discretization, k: f64, theta: f64) -> Stepper {
        let (fv, s) = (disc.fv_mass(), disc.stiffness());
        Stepper {
            lhs: fv.add_scaled(theta * k, s),
            rhs: fv.add_scaled(-(1.0 - theta) * k, s),
        }
    }

    fn apply(&self, disc: &Discretization, u: &mut Vec<f64>) -> Result<()> {
        let b = self.rhs.mul_vec(u);
        solve_pcg(&self.lhs, &b, u, disc.cg_options())?;
        Ok(())
    }
}

fn evolve(disc: &Discretization, v: &NodalField, grid: &TimeGrid, be_steps: usize, theta: f64, storage: Storage) -> Result<Evolution> {
    v.check_mesh(disc.mesh())?;
    let be = Stepper::new(disc, grid.k(), 1.0);
    let main = if theta == 1.0 { None } else { Some(Stepper::new(disc, grid.k(), theta)) };
    let mut u = v.values().to_vec();
    let mut trajectory = Vec::new();
    if storage == Storage::Full {
        trajectory.push(v.clone());
    }
    for n in 1..=grid.steps() {
        match (&main, n <= be_steps) {
            (Some(m), false) => m.apply(disc, &mut u)?,
            _ => be.apply(disc, &mut u)?,
        }
        if storage == Storage::Full {
            trajectory.push(NodalField::from_raw(v.mesh_id(), u.clone()));
        }
    }
    Ok(Evolution {
        final_field: NodalField::from_raw(v.mesh_id(), u),
        trajectory,
    })
}

/// `(M~ + kK) U^n = M~ U^{n-1}`, `U^0 = v`.
pub fn backward_euler(disc: &Discretization, v: &NodalField, grid: &TimeGrid, storage: Storage) -> Result<Evolution> {
    evolve(disc, v, grid, grid.steps(), 1.0, storage)
}

/// `(M~ + k/2 K) U^n = (M~ - k/2 K) U^{n-1}`; the first `be_start_steps`
/// (0 or 2) steps use backward Euler instead.
pub fn crank_nicolson(
    disc: &Discretization,
    v: &NodalField,
    grid: &TimeGrid,
    be_start_steps: usize,
    storage: Storage,
) -> Result<Evolution> {
    if be_start_steps != 0 && be_start_steps != 2 {
        return Err(FvemError::invalid(format!(
            "backward Euler start steps must be 0 or 2, got {be_start_steps}"
        )));
    }
    evolve(disc, v, grid, be_start_steps, 0.5, storage)
}

//! Refinement sweeps producing [`ConvergenceTable`]s.
//!
//! Every level (or time step) is an independent job. Jobs run on a rayon pool
//! of the requested size and the table is assembled by step size, so the
//! output does not depend on scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::exact::{EigenSeries, EulerSeparable, ExactSolution, RandomL2, TentProduct};
use super::norms::{error_norms, ErrorNorms, PointLocator};
use super::probe::{probe_quantity, probe_vector, ProbeConfig};
use super::qnorm::{qh_norm_estimate, QnormOptions};
use super::rates::{ConvergenceRow, ConvergenceTable, RateAxis};
use crate::assembly::CoefficientField;
use crate::error::{FvemError, Result};
use crate::field::NodalField;
use crate::geometry::{Mat2, Point};
use crate::mesh::{Mesh, MeshFamily};
use crate::operators::{Discretization, OperatorKind, RitzSource};
use crate::quadrature::QuadratureRule;
use crate::sparse::CgOptions;
use crate::timestepping::{backward_euler, crank_nicolson, Propagator, PropagatorOptions, Storage, TimeGrid};

/// Elliptic operator of a study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    Laplacian,
    /// The general-coefficient code path with `alpha = I`, `beta = 0`.
    GeneralIdentity,
    /// `alpha = diag(1 + x^2/2, 1 + y^2/2)`, `beta = 1 + xy`.
    Smooth,
    /// `alpha = diag((1+x)^2, (1+y)^2)`, `beta = beta0`.
    Euler { beta0: f64 },
    /// Constant `alpha` (row major) and `beta`.
    Constant { alpha: Mat2, beta: f64 },
}

impl OperatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorSpec::Laplacian => "laplacian",
            OperatorSpec::GeneralIdentity => "general-identity",
            OperatorSpec::Smooth => "smooth",
            OperatorSpec::Euler { .. } => "euler",
            OperatorSpec::Constant { .. } => "constant",
        }
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            OperatorSpec::Laplacian => OperatorKind::Laplacian,
            OperatorSpec::GeneralIdentity => OperatorKind::General(CoefficientField::laplacian()),
            OperatorSpec::Smooth => OperatorKind::General(CoefficientField::smooth_variable()),
            OperatorSpec::Euler { beta0 } => OperatorKind::General(CoefficientField::euler(*beta0)),
            OperatorSpec::Constant { alpha, beta } => OperatorKind::General(CoefficientField::constant(*alpha, *beta)),
        }
    }
}

/// Initial data `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSpec {
    /// `phi_11 = 2 sin(pi x) sin(pi y)`.
    Smooth,
    /// `min(x, 1-x) min(y, 1-y)`.
    Tent,
    /// Separable eigenfunction of the Euler operator with modes `(m, n)`.
    EulerMode { m: u32, n: u32 },
    /// Piecewise constant on a `cells x cells` grid, seeded.
    RandomL2 { seed: u64, cells: usize },
}

impl DataSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DataSpec::Smooth => "smooth",
            DataSpec::Tent => "tent",
            DataSpec::EulerMode { .. } => "euler-mode",
            DataSpec::RandomL2 { .. } => "random-l2",
        }
    }
}

/// `v_h` as a function of `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// `P_h v`.
    L2,
    /// `R_h v`.
    Ritz,
    /// `I_h v`.
    Interpolant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Semidiscrete,
    BackwardEuler,
    CrankNicolson,
    /// Crank-Nicolson with two backward Euler start steps.
    CnBeStart,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Semidiscrete => "semidiscrete",
            Scheme::BackwardEuler => "backward-euler",
            Scheme::CrankNicolson => "crank-nicolson",
            Scheme::CnBeStart => "cn-be-start",
        }
    }
}

/// What the spatial errors are measured against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorReference {
    /// The closed-form solution of the data/operator pair.
    Exact,
    /// The same scheme on a uniform symmetric mesh with `n` cells per side,
    /// which must be nested with every level.
    FineMesh { n: usize },
}

/// Settings shared by all studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub jobs: usize,
    pub quad_degree: usize,
    pub cg: CgOptions,
    pub propagator: PropagatorOptions,
    pub qnorm: QnormOptions,
    /// When false, every `seconds` entry is 0 so reruns are byte-identical.
    pub record_timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 1,
            quad_degree: 5,
            cg: CgOptions::default(),
            propagator: PropagatorOptions::default(),
            qnorm: QnormOptions::default(),
            record_timing: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialStudy {
    pub family: MeshFamily,
    pub levels: Vec<usize>,
    pub operator: OperatorSpec,
    pub data: DataSpec,
    pub projection: Projection,
    pub scheme: Scheme,
    /// Number of time steps for the fully discrete schemes.
    pub steps: Option<usize>,
    pub t: f64,
    pub reference: ErrorReference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalStudy {
    pub family: MeshFamily,
    pub operator: OperatorSpec,
    pub initial: TemporalData,
    pub scheme: Scheme,
    pub t: f64,
    pub steps: Vec<usize>,
}

/// Initial data of a temporal study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemporalData {
    Function { data: DataSpec, projection: Projection },
    Probe { config: ProbeConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeStudy {
    pub family: MeshFamily,
    pub levels: Vec<usize>,
    pub operator: OperatorSpec,
    pub data: ProbeData,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeData {
    /// Indicator sum over the pattern's vertices.
    Pattern { config: ProbeConfig },
    /// `P_h` of seeded piecewise-constant data.
    Projected { seed: u64, cells: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnormStudy {
    pub family: MeshFamily,
    pub levels: Vec<usize>,
    pub operator: OperatorSpec,
}

enum Solution {
    Series(EigenSeries),
    Tent(TentProduct),
    Euler(EulerSeparable),
}

impl Solution {
    /// Drops series terms that are below rounding for all times `>= t`.
    fn pruned(self, t: f64) -> Solution {
        match self {
            Solution::Series(s) => Solution::Series(s.pruned(t, 1e-17)),
            Solution::Tent(s) => Solution::Tent(s.pruned(t, 1e-17)),
            other => other,
        }
    }

    fn as_dyn(&self) -> &dyn ExactSolution {
        match self {
            Solution::Series(s) => s,
            Solution::Tent(s) => s,
            Solution::Euler(s) => s,
        }
    }
}

/// Closed-form solution for a data/operator pair, if one is known.
fn exact_solution(operator: &OperatorSpec, data: &DataSpec) -> Option<Solution> {
    match (operator, data) {
        (OperatorSpec::Laplacian | OperatorSpec::GeneralIdentity, DataSpec::Smooth) => {
            Some(Solution::Series(EigenSeries::phi11()))
        }
        (OperatorSpec::Laplacian | OperatorSpec::GeneralIdentity, DataSpec::Tent) => {
            Some(Solution::Tent(TentProduct::default()))
        }
        (OperatorSpec::Euler { beta0 }, DataSpec::EulerMode { m, n }) => {
            Some(Solution::Euler(EulerSeparable::single(*m, *n, *beta0)))
        }
        _ => None,
    }
}

fn initial_function(data: &DataSpec) -> Box<dyn Fn(Point) -> f64 + Sync> {
    match *data {
        DataSpec::Smooth => {
            let u = EigenSeries::phi11();
            Box::new(move |p| u.initial(p))
        }
        DataSpec::Tent => {
            let u = TentProduct::new(1);
            Box::new(move |p| u.initial(p))
        }
        DataSpec::EulerMode { m, n } => {
            let u = EulerSeparable::single(m, n, 0.0);
            Box::new(move |p| u.initial(p))
        }
        DataSpec::RandomL2 { seed, cells } => {
            let u = RandomL2::new(cells, seed);
            Box::new(move |p| u.value(p))
        }
    }
}

fn discretization<'m>(mesh: &'m Mesh, operator: &OperatorSpec, opts: &RunOptions) -> Result<Discretization<'m>> {
    Ok(Discretization::new(mesh, operator.kind())?
        .with_cg(opts.cg)
        .with_rule(QuadratureRule::of_degree(opts.quad_degree)?))
}

fn initial_field(
    disc: &Discretization,
    operator: &OperatorSpec,
    data: &DataSpec,
    projection: Projection,
) -> Result<NodalField> {
    let v = initial_function(data);
    match projection {
        Projection::L2 => disc.l2_project(&*v),
        Projection::Interpolant => Ok(disc.interpolate(&*v)),
        Projection::Ritz => {
            let exact = exact_solution(operator, data).ok_or_else(|| {
                FvemError::invalid(format!(
                    "the Ritz projection of {} data needs a closed-form operator image for the {} operator",
                    data.name(),
                    operator.name()
                ))
            })?;
            let u = exact.as_dyn();
            disc.ritz_project(RitzSource::OperatorImage(&|p| u.operator_image(p, 0.0)))
        }
    }
}

fn advance(disc: &Discretization, prop: Option<&Propagator>, v: &NodalField, scheme: Scheme, t: f64, steps: Option<usize>) -> Result<NodalField> {
    let grid = || -> Result<TimeGrid> {
        let n = steps.ok_or_else(|| FvemError::invalid(format!("the {} scheme needs a step count", scheme.name())))?;
        TimeGrid::new(t, n)
    };
    match scheme {
        Scheme::Semidiscrete => match prop {
            Some(p) => p.propagate(v, t),
            None => Err(FvemError::invalid("semidiscrete evolution needs a propagator")),
        },
        Scheme::BackwardEuler => Ok(backward_euler(disc, v, &grid()?, Storage::FinalOnly)?.final_field),
        Scheme::CrankNicolson => Ok(crank_nicolson(disc, v, &grid()?, 0, Storage::FinalOnly)?.final_field),
        Scheme::CnBeStart => Ok(crank_nicolson(disc, v, &grid()?, 2, Storage::FinalOnly)?.final_field),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| FvemError::invalid(format!("cannot start {jobs} worker threads: {e}")))
}

/// Runs `job` for every item on the pool; failures become rows with `error` set.
fn run_rows<T: Sync>(
    items: &[T],
    opts: &RunOptions,
    blank: impl Fn(&T) -> ConvergenceRow + Sync,
    job: impl Fn(&T, &mut ConvergenceRow) -> Result<()> + Sync,
) -> Result<Vec<ConvergenceRow>> {
    use rayon::prelude::*;
    let rows = pool(opts.jobs)?.install(|| {
        items
            .par_iter()
            .map(|item| {
                let start = Instant::now();
                let mut row = blank(item);
                if let Err(e) = job(item, &mut row) {
                    log::error!("{} {} level {}: {e}", row.family, row.scheme, row.n);
                    let keep = (row.family.clone(), row.scheme.clone(), row.n, row.h, row.k, row.t);
                    row = ConvergenceRow {
                        family: keep.0,
                        scheme: keep.1,
                        n: keep.2,
                        h: keep.3,
                        k: keep.4,
                        t: keep.5,
                        error: Some(e.to_string()),
                        ..Default::default()
                    };
                }
                row.seconds = if opts.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
                row
            })
            .collect()
    });
    Ok(rows)
}

fn base_row(family: &MeshFamily, scheme: &str, t: f64) -> ConvergenceRow {
    ConvergenceRow {
        family: family.name().to_string(),
        scheme: scheme.to_string(),
        n: family.level(),
        h: family.nominal_h(),
        t,
        extra: BTreeMap::new(),
        ..Default::default()
    }
}

fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() {
        return Err(FvemError::invalid("a sweep needs at least one level"));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(FvemError::invalid(format!("final time must be positive, got {t}")));
    }
    Ok(())
}

/// One solve on one mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleSolve {
    pub family: MeshFamily,
    pub operator: OperatorSpec,
    pub data: DataSpec,
    pub projection: Projection,
    pub scheme: Scheme,
    pub t: f64,
    /// Time steps; required by every scheme except `Semidiscrete`.
    pub steps: Option<usize>,
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub mesh: Mesh,
    pub solution: NodalField,
    /// Present when the data/operator pair has a closed-form solution.
    pub errors: Option<ErrorNorms>,
}

pub fn run_single(spec: &SingleSolve, opts: &RunOptions) -> Result<SolveOutcome> {
    check_time(spec.t)?;
    if spec.scheme != Scheme::Semidiscrete && spec.steps.is_none() {
        return Err(FvemError::invalid(format!("the {} scheme needs a step count", spec.scheme.name())));
    }
    let mesh = spec.family.generate()?;
    let (solution, errors) = {
        let disc = discretization(&mesh, &spec.operator, opts)?;
        let v = initial_field(&disc, &spec.operator, &spec.data, spec.projection)?;
        let prop = Propagator::new(&disc, opts.propagator);
        let uh = advance(&disc, Some(&prop), &v, spec.scheme, spec.t, spec.steps)?;
        let errors = match exact_solution(&spec.operator, &spec.data).map(|s| s.pruned(spec.t)) {
            Some(u) => {
                let u = u.as_dyn();
                let t = spec.t;
                Some(error_norms(&mesh, &uh, &|p| u.value(p, t), &|p| u.gradient(p, t), disc.rule())?)
            }
            None => None,
        };
        (uh, errors)
    };
    Ok(SolveOutcome { mesh, solution, errors })
}

struct FineReference {
    mesh: Mesh,
    solution: Vec<f64>,
}

/// Error of a semidiscrete or fully discrete solution under refinement.
pub fn run_spatial(study: &SpatialStudy, opts: &RunOptions) -> Result<ConvergenceTable> {
    check_levels(&study.levels)?;
    check_time(study.t)?;
    if study.scheme != Scheme::Semidiscrete && study.steps.is_none() {
        return Err(FvemError::invalid(format!("the {} scheme needs a step count", study.scheme.name())));
    }
    let exact = exact_solution(&study.operator, &study.data).map(|s| s.pruned(study.t));
    let fine = match study.reference {
        ErrorReference::Exact => {
            if exact.is_none() {
                return Err(FvemError::invalid(format!(
                    "no closed-form solution for {} data with the {} operator; use a fine-mesh reference",
                    study.data.name(),
                    study.operator.name()
                )));
            }
            None
        }
        ErrorReference::FineMesh { n } => {
            let mesh = MeshFamily::UniformSymmetric { n }.generate()?;
            let disc = discretization(&mesh, &study.operator, opts)?;
            let v = initial_field(&disc, &study.operator, &study.data, study.projection)?;
            let prop = Propagator::new(&disc, opts.propagator);
            let u = advance(&disc, Some(&prop), &v, study.scheme, study.t, study.steps)?;
            let solution = u.into_values();
            Some(FineReference { mesh, solution })
        }
    };
    let families: Vec<MeshFamily> = study.levels.iter().map(|&l| study.family.at_level(l)).collect();
    let k = study.steps.map(|n| study.t / n as f64).filter(|_| study.scheme != Scheme::Semidiscrete);
    let rows = run_rows(
        &families,
        opts,
        |f| ConvergenceRow {
            k,
            ..base_row(f, study.scheme.name(), study.t)
        },
        |family, row| {
            let mesh = family.generate()?;
            let disc = discretization(&mesh, &study.operator, opts)?;
            let v = initial_field(&disc, &study.operator, &study.data, study.projection)?;
            if study.projection == Projection::L2 {
                if let Some(u) = &exact {
                    let u = u.as_dyn();
                    let zero = NodalField::zeros(&mesh);
                    let v1 = error_norms(&mesh, &zero, &|p| u.initial(p), &|p| u.gradient(p, 0.0), disc.rule())?.h1;
                    row.extra.insert("stability".into(), disc.h1_seminorm(&v) / v1);
                }
            }
            let prop = Propagator::new(&disc, opts.propagator);
            let uh = advance(&disc, Some(&prop), &v, study.scheme, study.t, study.steps)?;
            match (&fine, &exact) {
                (Some(r), _) => {
                    let loc = PointLocator::new(&mesh);
                    let moved = loc.transfer(&uh, &r.mesh)?;
                    let rd = discretization(&r.mesh, &OperatorSpec::Laplacian, opts)?;
                    let e = moved.sub(&NodalField::new(&r.mesh, r.solution.clone())?)?;
                    row.err_l2 = Some(rd.l2_norm(&e));
                    row.err_h1 = Some(rd.h1_seminorm(&e));
                }
                (None, Some(u)) => {
                    let u = u.as_dyn();
                    let t = study.t;
                    let e = error_norms(&mesh, &uh, &|p| u.value(p, t), &|p| u.gradient(p, t), disc.rule())?;
                    row.err_l2 = Some(e.l2);
                    row.err_h1 = Some(e.h1);
                }
                (None, None) => unreachable!("reference checked above"),
            }
            Ok(())
        },
    )?;
    Ok(ConvergenceTable::new(RateAxis::Space, rows))
}

/// Time discretization error against the semidiscrete solution on the same mesh.
pub fn run_temporal(study: &TemporalStudy, opts: &RunOptions) -> Result<ConvergenceTable> {
    check_levels(&study.steps)?;
    check_time(study.t)?;
    if study.scheme == Scheme::Semidiscrete {
        return Err(FvemError::invalid("a temporal study needs a time-stepping scheme"));
    }
    let mesh = study.family.generate()?;
    let disc = discretization(&mesh, &study.operator, opts)?;
    let v = match study.initial {
        TemporalData::Function { data, projection } => initial_field(&disc, &study.operator, &data, projection)?,
        TemporalData::Probe { config } => probe_vector(&mesh, &config)?,
    };
    let prop = Propagator::new(&disc, opts.propagator);
    let reference = prop.propagate(&v, study.t)?;
    let norm = disc.l2_norm(&reference);
    let rows = run_rows(
        &study.steps,
        opts,
        |&n| ConvergenceRow {
            k: Some(study.t / n as f64),
            ..base_row(&study.family, study.scheme.name(), study.t)
        },
        |&n, row| {
            let u = advance(&disc, None, &v, study.scheme, study.t, Some(n))?;
            let e = u.sub(&reference)?;
            row.err_l2 = Some(disc.l2_norm(&e));
            row.err_h1 = Some(disc.h1_seminorm(&e));
            row.extra.insert("reference_l2".into(), norm);
            Ok(())
        },
    )?;
    Ok(ConvergenceTable::new(RateAxis::Time, rows))
}

/// The probe quantity under refinement.
pub fn run_probe(study: &ProbeStudy, opts: &RunOptions) -> Result<ConvergenceTable> {
    check_levels(&study.levels)?;
    check_time(study.t)?;
    let families: Vec<MeshFamily> = study.levels.iter().map(|&l| study.family.at_level(l)).collect();
    let rows = run_rows(
        &families,
        opts,
        |f| base_row(f, "probe", study.t),
        |family, row| {
            let mesh = family.generate()?;
            let disc = discretization(&mesh, &study.operator, opts)?;
            let v = match study.data {
                ProbeData::Pattern { config } => probe_vector(&mesh, &config)?,
                ProbeData::Projected { seed, cells } => {
                    initial_field(&disc, &study.operator, &DataSpec::RandomL2 { seed, cells }, Projection::L2)?
                }
            };
            let prop = Propagator::new(&disc, opts.propagator);
            row.probe = Some(probe_quantity(&prop, &v, study.t)?);
            row.extra.insert("data_l2".into(), disc.l2_norm(&v));
            Ok(())
        },
    )?;
    Ok(ConvergenceTable::new(RateAxis::Space, rows))
}

/// `||Q_h||` under refinement; the value is reported in the probe column.
pub fn run_qnorm(study: &QnormStudy, opts: &RunOptions) -> Result<ConvergenceTable> {
    check_levels(&study.levels)?;
    let families: Vec<MeshFamily> = study.levels.iter().map(|&l| study.family.at_level(l)).collect();
    let rows = run_rows(
        &families,
        opts,
        |f| base_row(f, "qnorm", 0.0),
        |family, row| {
            let mesh = family.generate()?;
            let disc = discretization(&mesh, &study.operator, opts)?;
            let est = qh_norm_estimate(&disc, &opts.qnorm)?;
            row.probe = Some(est.value);
            row.extra.insert("iterations".into(), est.iterations as f64);
            row.extra.insert("converged".into(), if est.converged { 1.0 } else { 0.0 });
            Ok(())
        },
    )?;
    Ok(ConvergenceTable::new(RateAxis::Space, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> RunOptions {
        RunOptions {
            record_timing: false,
            ..Default::default()
        }
    }

    fn smooth_study(operator: OperatorSpec) -> SpatialStudy {
        SpatialStudy {
            family: MeshFamily::UniformSymmetric { n: 4 },
            levels: vec![4, 8, 16],
            operator,
            data: DataSpec::Smooth,
            projection: Projection::Ritz,
            scheme: Scheme::Semidiscrete,
            steps: None,
            t: 0.1,
            reference: ErrorReference::Exact,
        }
    }

    #[test]
    fn smooth_sweep_has_second_order() {
        let table = run_spatial(&smooth_study(OperatorSpec::Laplacian), &quiet()).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert!(table.fitted.l2.unwrap() > 1.8, "{:?}", table.fitted);
        assert!(table.fitted.h1.unwrap() > 0.9, "{:?}", table.fitted);
        assert!(table.rows.iter().all(|r| r.seconds == 0.0 && r.error.is_none()));
    }

    #[test]
    fn job_count_does_not_change_results() {
        let study = smooth_study(OperatorSpec::Laplacian);
        let a = run_spatial(&study, &quiet()).unwrap();
        let b = run_spatial(&study, &RunOptions { jobs: 3, ..quiet() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_coefficients_reproduce_the_laplacian() {
        let a = run_spatial(&smooth_study(OperatorSpec::Laplacian), &quiet()).unwrap();
        let b = run_spatial(&smooth_study(OperatorSpec::GeneralIdentity), &quiet()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_closed_form_is_rejected() {
        let mut s = smooth_study(OperatorSpec::Smooth);
        assert!(run_spatial(&s, &quiet()).is_err());
        s.reference = ErrorReference::FineMesh { n: 32 };
        // The Ritz projection needs the operator image, so the level fails.
        let table = run_spatial(&s, &quiet()).err();
        assert!(table.is_some());
    }

    #[test]
    fn failed_levels_are_recorded() {
        let mut s = smooth_study(OperatorSpec::Laplacian);
        s.family = MeshFamily::CounterexampleStripes { n: 8 };
        s.levels = vec![6, 8];
        let table = run_spatial(&s, &quiet()).unwrap();
        let bad = table.rows.iter().find(|r| r.n == 6).unwrap();
        assert!(bad.error.as_deref().unwrap().contains("multiple of 4"));
        assert_eq!(table.fitted.l2, None);
    }

    #[test]
    fn temporal_orders() {
        let study = TemporalStudy {
            family: MeshFamily::UniformSymmetric { n: 8 },
            operator: OperatorSpec::Laplacian,
            initial: TemporalData::Function {
                data: DataSpec::Smooth,
                projection: Projection::Ritz,
            },
            scheme: Scheme::BackwardEuler,
            t: 0.1,
            steps: vec![40, 80, 160],
        };
        let be = run_temporal(&study, &quiet()).unwrap();
        assert!((be.fitted.l2.unwrap() - 1.0).abs() < 0.1, "{:?}", be.fitted);
        let cn = run_temporal(&TemporalStudy { scheme: Scheme::CrankNicolson, ..study }, &quiet()).unwrap();
        assert!((cn.fitted.l2.unwrap() - 2.0).abs() < 0.2, "{:?}", cn.fitted);
        assert_eq!(be.rows[0].k, Some(0.1 / 40.0));
    }

    #[test]
    fn single_solve_matches_sweep_row() {
        let spec = SingleSolve {
            family: MeshFamily::UniformSymmetric { n: 8 },
            operator: OperatorSpec::Laplacian,
            data: DataSpec::Smooth,
            projection: Projection::Ritz,
            scheme: Scheme::Semidiscrete,
            t: 0.1,
            steps: None,
        };
        let out = run_single(&spec, &quiet()).unwrap();
        let table = run_spatial(&smooth_study(OperatorSpec::Laplacian), &quiet()).unwrap();
        let row = table.rows.iter().find(|r| r.n == 8).unwrap();
        assert_eq!(out.errors.unwrap().l2, row.err_l2.unwrap());
        assert_eq!(out.solution.len(), out.mesh.num_interior());

        let be = SingleSolve { scheme: Scheme::BackwardEuler, ..spec.clone() };
        assert!(run_single(&be, &quiet()).is_err());
        let general = SingleSolve {
            operator: OperatorSpec::Constant { alpha: [[2.0, 0.0], [0.0, 1.0]], beta: 0.5 },
            data: DataSpec::Smooth,
            projection: Projection::L2,
            ..spec
        };
        let out = run_single(&general, &quiet()).unwrap();
        assert!(out.errors.is_none());
        assert!(out.solution.max_abs() > 0.0);
    }
}

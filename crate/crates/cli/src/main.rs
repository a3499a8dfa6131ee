//! `fvem`: mesh generation, single solves and convergence sweeps for finite
//! volume element approximations of parabolic problems on the unit square.
//!
//! Exit codes: 0 success, 1 runtime failure or a failed sweep level, 2 usage
//! error, 3 rate assertion failure.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use fvem::analysis::{
    run_probe, run_qnorm, run_single, run_spatial, run_temporal, ConvergenceTable, ProbeStudy, QnormStudy,
    SingleSolve, SpatialStudy, TemporalData, TemporalStudy,
};
use fvem::mesh::{classify_patch, save_mesh, PatchSymmetry, DEFAULT_SYMMETRY_TOLERANCE};
use fvem::{FvemError, Mesh, MeshFamily};
use serde::Serialize;

use config::{
    usage, CommandName, DataName, FamilyName, OperatorName, PatternName, ProjectionName, PropagatorName,
    RunConfig, SchemeName, UsageError,
};
use output::Assertion;

#[derive(Parser)]
#[command(name = "fvem", version, about = "Finite volume element solver and convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh and classify its vertex patches.
    Mesh(Flags),
    /// One solve on one mesh, with an error report when the exact solution is known.
    Solve(Flags),
    /// Spatial (over --levels) or temporal (over --steps-list) error sweep.
    Convergence(Flags),
    /// Sweep of the nonsmooth-data probe quantity.
    Probe(Flags),
    /// Sweep of the operator norm of Q_h.
    Qnorm(Flags),
}

/// Flags shared by all subcommands; each command reads the ones it needs.
/// Flags override values from `--config`.
#[derive(Args, Default)]
struct Flags {
    /// Output directory.
    #[arg(long, default_value = "fvem-out")]
    out: PathBuf,
    /// TOML run configuration, as written to `config.toml` by a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for perturbed meshes and random data.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep levels.
    #[arg(long)]
    jobs: Option<usize>,
    /// Quadrature degree for error norms and load vectors.
    #[arg(long)]
    quad_order: Option<usize>,
    /// Relative tolerance of the linear solvers.
    #[arg(long)]
    tol: Option<f64>,
    /// Write 0 in the seconds column so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,

    #[arg(long, value_enum)]
    family: Option<FamilyName>,
    /// Refinement level: N, or J for the interface family.
    #[arg(long, visible_alias = "j")]
    n: Option<usize>,
    /// Comma-separated refinement levels of a sweep.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Vertex perturbation of the almost symmetric families, relative to h.
    #[arg(long)]
    amplitude: Option<f64>,

    #[arg(long, value_enum)]
    operator: Option<OperatorName>,
    /// Row-major constant diffusion tensor for `--operator general`.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Constant reaction coefficient for `--operator general`.
    #[arg(long)]
    beta: Option<f64>,
    /// Reaction coefficient of the Euler operator.
    #[arg(long)]
    beta0: Option<f64>,

    #[arg(long, value_enum)]
    data: Option<DataName>,
    /// Modes `m,n` of `--data euler-mode`.
    #[arg(long, value_delimiter = ',')]
    mode: Option<Vec<u32>>,
    /// Grid cells per side of `--data random-l2`.
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long, value_enum)]
    projection: Option<ProjectionName>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    /// Final time.
    #[arg(long)]
    t: Option<f64>,
    /// Time steps of a fully discrete scheme.
    #[arg(long)]
    steps: Option<usize>,
    /// Time step; must divide --t.
    #[arg(long)]
    k: Option<f64>,
    /// Comma-separated step counts of a temporal sweep.
    #[arg(long, value_delimiter = ',')]
    steps_list: Option<Vec<usize>>,
    /// Half-width of the probe square around (1/4, 1/4).
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, value_enum)]
    pattern: Option<PatternName>,
    /// Exact semidiscrete evolution used by the semidiscrete scheme and the probe.
    #[arg(long, value_enum)]
    propagator: Option<PropagatorName>,
    /// Measure errors against a uniform N x N reference solve instead of the exact solution.
    #[arg(long)]
    reference_n: Option<usize>,
    /// Fail (exit 3) if the fitted rate is below this value.
    #[arg(long)]
    assert_rate: Option<f64>,
    /// Fail (exit 3) if the fitted rate is above this value.
    #[arg(long)]
    assert_rate_max: Option<f64>,
}

macro_rules! overlay {
    ($cfg:ident, $flags:ident, $($field:ident),*) => {
        $( if let Some(v) = $flags.$field.clone() { $cfg.$field = v.into(); } )*
    };
}

impl Flags {
    fn config(&self, command: CommandName) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        overlay!(cfg, self, seed, jobs, quad_order, tol, family, amplitude, operator, beta, beta0, cells, scheme, t, d, propagator);
        if let Some(n) = self.n {
            cfg.n = Some(n);
            cfg.levels = None;
        }
        if let Some(levels) = &self.levels {
            cfg.levels = Some(levels.clone());
            cfg.n = None;
        }
        if let Some(a) = &self.alpha {
            cfg.alpha = a.as_slice().try_into().map_err(|_| usage("--alpha takes four comma-separated values"))?;
        }
        if let Some(m) = &self.mode {
            cfg.mode = m.as_slice().try_into().map_err(|_| usage("--mode takes two comma-separated values"))?;
        }
        if self.data.is_some() {
            cfg.data = self.data;
            if self.projection.is_none() {
                cfg.projection = None;
            }
        }
        if self.projection.is_some() {
            cfg.projection = self.projection;
        }
        if self.steps.is_some() || self.k.is_some() {
            cfg.steps = self.steps;
            cfg.k = self.k;
        }
        overlay_opt(&mut cfg.steps_list, &self.steps_list);
        overlay_opt(&mut cfg.pattern, &self.pattern);
        overlay_opt(&mut cfg.reference_n, &self.reference_n);
        overlay_opt(&mut cfg.assert_rate, &self.assert_rate);
        overlay_opt(&mut cfg.assert_rate_max, &self.assert_rate_max);
        if self.no_timing {
            cfg.timing = false;
        }
        cfg.resolve(command)
    }
}

fn overlay_opt<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        *slot = flag.clone();
    }
}

/// Result of a command that ran to completion.
enum Outcome {
    Done,
    FailedLevels(usize),
    AssertionFailed(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, flags) = match &cli.command {
        Command::Mesh(f) => (CommandName::Mesh, f),
        Command::Solve(f) => (CommandName::Solve, f),
        Command::Convergence(f) => (CommandName::Convergence, f),
        Command::Probe(f) => (CommandName::Probe, f),
        Command::Qnorm(f) => (CommandName::Qnorm, f),
    };
    match run(name, flags) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::FailedLevels(n)) => {
            eprintln!("error: {n} level(s) failed; see summary.json");
            ExitCode::from(1)
        }
        Ok(Outcome::AssertionFailed(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(3)
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(name: CommandName, flags: &Flags) -> Result<Outcome> {
    let cfg = flags.config(name)?;
    let out = flags.out.as_path();
    output::write_config(out, &cfg)?;
    match name {
        CommandName::Mesh => cmd_mesh(&cfg, out),
        CommandName::Solve => cmd_solve(&cfg, out),
        CommandName::Convergence => cmd_convergence(&cfg, out),
        CommandName::Probe => cmd_probe(&cfg, out),
        CommandName::Qnorm => cmd_qnorm(&cfg, out),
    }
}

/// Parameter errors from the study runners are usage errors; the rest are runtime failures.
fn study_error(e: FvemError) -> anyhow::Error {
    match e {
        FvemError::InvalidParameter(_) => usage(e.to_string()),
        other => other.into(),
    }
}

fn generate(family: &MeshFamily) -> Result<Mesh> {
    family.generate().map_err(|e| usage(format!("cannot generate the {} mesh: {e}", family.name())))
}

#[derive(Serialize)]
struct MeshReport {
    family: &'static str,
    level: usize,
    vertices: usize,
    triangles: usize,
    interior: usize,
    h_max: f64,
    max_radius_ratio: f64,
    symmetric: usize,
    asymmetric: usize,
    asymmetric_vertices: Vec<usize>,
}

fn cmd_mesh(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let family = cfg.family();
    let mesh = generate(&family)?;
    let mut asymmetric_vertices = Vec::new();
    for patch in mesh.patches() {
        if classify_patch(&patch, DEFAULT_SYMMETRY_TOLERANCE) == PatchSymmetry::Asymmetric {
            asymmetric_vertices.push(patch.center);
        }
    }
    let report = MeshReport {
        family: family.name(),
        level: family.level(),
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        interior: mesh.num_interior(),
        h_max: mesh.h_max(),
        max_radius_ratio: mesh.max_radius_ratio(),
        symmetric: mesh.num_interior() - asymmetric_vertices.len(),
        asymmetric: asymmetric_vertices.len(),
        asymmetric_vertices,
    };
    save_mesh(&mesh, out.join("mesh.txt"))?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    println!("{} level {}: {} vertices, {} triangles, {} interior", report.family, report.level, report.vertices, report.triangles, report.interior);
    println!("symmetric: {}", report.symmetric);
    if report.asymmetric > 0 && report.asymmetric == report.interior {
        println!("asymmetric: {} (all interior)", report.asymmetric);
    } else {
        println!("asymmetric: {}", report.asymmetric);
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct SolveReport {
    family: &'static str,
    level: usize,
    h: f64,
    operator: &'static str,
    data: &'static str,
    scheme: &'static str,
    t: f64,
    steps: Option<usize>,
    err_l2: Option<f64>,
    err_h1: Option<f64>,
    max_abs: f64,
}

fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = SingleSolve {
        family: cfg.family(),
        operator: cfg.operator(),
        data: cfg.data_spec()?,
        projection: cfg.projection(),
        scheme: cfg.scheme(),
        t: cfg.t,
        steps: cfg.steps,
    };
    let outcome = run_single(&spec, &cfg.run_options())?;
    let mesh = &outcome.mesh;
    let values = outcome.solution.vertex_values(mesh);
    let mut text = String::from("# x y u\n");
    for (p, u) in mesh.vertices().iter().zip(&values) {
        text.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", p.x, p.y, u));
    }
    fs::write(out.join("solution.txt"), text)?;
    let report = SolveReport {
        family: spec.family.name(),
        level: spec.family.level(),
        h: mesh.h_max(),
        operator: spec.operator.name(),
        data: spec.data.name(),
        scheme: spec.scheme.name(),
        t: spec.t,
        steps: spec.steps,
        err_l2: outcome.errors.map(|e| e.l2),
        err_h1: outcome.errors.map(|e| e.h1),
        max_abs: outcome.solution.max_abs(),
    };
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    match outcome.errors {
        Some(e) => println!("err_l2 {:.6e}  err_h1 {:.6e}", e.l2, e.h1),
        None => println!("no closed-form solution for this data and operator; wrote the field only"),
    }
    Ok(Outcome::Done)
}

fn cmd_convergence(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let opts = cfg.run_options();
    let table = match &cfg.steps_list {
        Some(steps) => {
            let initial = match cfg.data {
                Some(DataName::Pattern) => TemporalData::Probe {
                    config: cfg.probe_config()?,
                },
                _ => TemporalData::Function {
                    data: cfg.data_spec()?,
                    projection: cfg.projection(),
                },
            };
            let study = TemporalStudy {
                family: cfg.family(),
                operator: cfg.operator(),
                initial,
                scheme: cfg.scheme(),
                t: cfg.t,
                steps: steps.clone(),
            };
            run_temporal(&study, &opts).map_err(study_error)?
        }
        None => {
            let study = SpatialStudy {
                family: cfg.family(),
                levels: cfg.levels(),
                operator: cfg.operator(),
                data: cfg.data_spec()?,
                projection: cfg.projection(),
                scheme: cfg.scheme(),
                steps: cfg.steps,
                t: cfg.t,
                reference: cfg.reference(),
            };
            run_spatial(&study, &opts).map_err(study_error)?
        }
    };
    finish(cfg, out, "convergence", &table, "l2", table.fitted.l2)
}

fn cmd_probe(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let study = ProbeStudy {
        family: cfg.family(),
        levels: cfg.levels(),
        operator: cfg.operator(),
        data: cfg.probe_data()?,
        t: cfg.t,
    };
    let table = run_probe(&study, &cfg.run_options()).map_err(study_error)?;
    finish(cfg, out, "probe", &table, "probe", table.fitted.probe)
}

fn cmd_qnorm(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let study = QnormStudy {
        family: cfg.family(),
        levels: cfg.levels(),
        operator: cfg.operator(),
    };
    let table = run_qnorm(&study, &cfg.run_options()).map_err(study_error)?;
    finish(cfg, out, "qnorm", &table, "probe", table.fitted.probe)
}

/// Writes the table, prints it, and applies the rate assertions.
fn finish(
    cfg: &RunConfig,
    out: &Path,
    command: &str,
    table: &ConvergenceTable,
    column: &'static str,
    rate: Option<f64>,
) -> Result<Outcome> {
    let assertion = (cfg.assert_rate.is_some() || cfg.assert_rate_max.is_some()).then(|| {
        let passed = rate.is_some_and(|r| cfg.assert_rate.is_none_or(|m| r >= m) && cfg.assert_rate_max.is_none_or(|m| r <= m));
        Assertion {
            column,
            rate,
            min: cfg.assert_rate,
            max: cfg.assert_rate_max,
            passed,
        }
    });
    output::write_table(out, command, table, assertion.as_ref())?;
    output::print_table(table);
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Ok(Outcome::FailedLevels(failed));
    }
    match assertion {
        Some(a) if !a.passed => Ok(Outcome::AssertionFailed(format!(
            "fitted {column} rate {} outside [{}, {}]",
            rate.map(|r| format!("{r:.4}")).unwrap_or_else(|| "unavailable".into()),
            a.min.map(|m| m.to_string()).unwrap_or_else(|| "-inf".into()),
            a.max.map(|m| m.to_string()).unwrap_or_else(|| "inf".into()),
        ))),
        _ => Ok(Outcome::Done),
    }
}

//! The effective run configuration: a flat TOML table, loaded from `--config`
//! and overridden by flags, written next to every command's outputs.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use fvem::analysis::{
    DataSpec, ErrorReference, OperatorSpec, ProbeConfig, ProbeData, ProbePattern, Projection, RunOptions, Scheme,
};
use fvem::{CgOptions, MeshFamily, PropagationMethod, PropagatorOptions, Subdomain};
use serde::{Deserialize, Serialize};

/// A bad flag or an inconsistent combination of flags (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Mesh,
    Solve,
    Convergence,
    Probe,
    Qnorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Symmetric,
    AlmostSymmetric,
    Piecewise,
    Stripes,
    Interface,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorName {
    Laplacian,
    /// Constant coefficients from `--alpha` and `--beta`.
    General,
    /// `alpha = diag(1 + x^2/2, 1 + y^2/2)`, `beta = 1 + xy`.
    Smooth,
    /// `alpha = diag((1+x)^2, (1+y)^2)`, `beta = beta0`.
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DataName {
    Smooth,
    Tent,
    EulerMode,
    RandomL2,
    /// Indicator sum over the probe pattern's vertices.
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionName {
    L2,
    Ritz,
    Interpolant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Semidiscrete,
    BackwardEuler,
    CrankNicolson,
    CnBeStart,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PatternName {
    Stripes,
    Interface,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorName {
    Auto,
    Eigen,
    Krylov,
    Substep,
}

/// Every parameter of a run. Optional fields are resolved to concrete values
/// before the config is written, so a saved config reruns without flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub family: FamilyName,
    /// Single level (N, or J for the interface family).
    pub n: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub amplitude: f64,
    pub seed: u64,
    pub operator: OperatorName,
    /// Row-major `alpha` for the general operator.
    pub alpha: [f64; 4],
    pub beta: f64,
    pub beta0: f64,
    pub data: Option<DataName>,
    pub mode: [u32; 2],
    pub cells: usize,
    pub projection: Option<ProjectionName>,
    pub scheme: SchemeName,
    pub t: f64,
    pub steps: Option<usize>,
    pub k: Option<f64>,
    pub steps_list: Option<Vec<usize>>,
    pub d: f64,
    pub pattern: Option<PatternName>,
    pub propagator: PropagatorName,
    pub reference_n: Option<usize>,
    pub jobs: usize,
    pub quad_order: usize,
    pub tol: f64,
    pub timing: bool,
    pub assert_rate: Option<f64>,
    pub assert_rate_max: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            family: FamilyName::Symmetric,
            n: None,
            levels: None,
            amplitude: 0.3,
            seed: 0,
            operator: OperatorName::Laplacian,
            alpha: [1.0, 0.0, 0.0, 1.0],
            beta: 0.0,
            beta0: 1.0,
            data: None,
            mode: [1, 1],
            cells: 8,
            projection: None,
            scheme: SchemeName::Semidiscrete,
            t: 0.1,
            steps: None,
            k: None,
            steps_list: None,
            d: 0.065,
            pattern: None,
            propagator: PropagatorName::Auto,
            reference_n: None,
            jobs: 1,
            quad_order: 5,
            tol: 1e-12,
            timing: true,
            assert_rate: None,
            assert_rate_max: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Fills command-dependent defaults and checks flag consistency.
    pub fn resolve(mut self, command: CommandName) -> Result<RunConfig> {
        if let Some(saved) = self.command {
            if saved != command {
                return Err(usage(format!("config was written by `{saved:?}`, not `{command:?}`").to_lowercase()));
            }
        }
        self.command = Some(command);
        if self.jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(usage(format!("--tol must be in (0, 1), got {}", self.tol)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(usage(format!("--t must be positive, got {}", self.t)));
        }
        if let Some(k) = self.k {
            if !(k > 0.0 && k.is_finite()) {
                return Err(usage(format!("--k must be positive, got {k}")));
            }
        }
        if self.steps == Some(0) {
            return Err(usage("--steps must be at least 1"));
        }
        if self.data.is_none() {
            self.data = Some(match (command, self.operator) {
                (CommandName::Probe, _) => DataName::Pattern,
                (_, OperatorName::Euler) => DataName::EulerMode,
                _ => DataName::Smooth,
            });
        }
        if self.projection.is_none() {
            self.projection = Some(match self.data {
                Some(DataName::Smooth | DataName::EulerMode) => ProjectionName::Ritz,
                _ => ProjectionName::L2,
            });
        }
        if self.pattern.is_none() {
            self.pattern = Some(match self.family {
                FamilyName::Interface => PatternName::Interface,
                _ => PatternName::Stripes,
            });
        }
        match command {
            CommandName::Mesh | CommandName::Solve => {
                if self.n.is_none() {
                    self.n = Some(self.default_levels(command)[0]);
                }
                self.levels = None;
            }
            _ => {
                if self.levels.is_none() {
                    self.levels = Some(match self.n {
                        Some(n) => vec![n],
                        None => self.default_levels(command),
                    });
                }
                self.n = None;
                if self.levels.as_ref().is_some_and(|l| l.is_empty()) {
                    return Err(usage("--levels is empty"));
                }
            }
        }
        self.resolve_steps()?;
        Ok(self)
    }

    fn default_levels(&self, command: CommandName) -> Vec<usize> {
        match (self.family, command) {
            // N = 8 has no stripes-pattern vertex inside the probe square.
            (FamilyName::Stripes, CommandName::Probe) => vec![16, 32, 64],
            (FamilyName::Interface, CommandName::Convergence) => vec![4, 8, 16, 32],
            (FamilyName::Interface, _) => vec![2, 4, 8, 16],
            _ => vec![8, 16, 32, 64],
        }
    }

    /// Reconciles `--steps` and `--k` into a step count.
    fn resolve_steps(&mut self) -> Result<()> {
        if let Some(k) = self.k {
            let n = (self.t / k).round();
            if n < 1.0 || (n * k - self.t).abs() > 1e-9 * self.t {
                return Err(usage(format!("--k {k} does not divide --t {} into whole steps", self.t)));
            }
            let n = n as usize;
            if self.steps.is_some_and(|s| s != n) {
                return Err(usage(format!(
                    "--steps {} and --k {k} disagree: {} * {k} != {}",
                    self.steps.unwrap(),
                    self.steps.unwrap(),
                    self.t
                )));
            }
            self.steps = Some(n);
            self.k = None;
        }
        let timestepping = self.scheme != SchemeName::Semidiscrete;
        let temporal = self.steps_list.is_some();
        if temporal {
            if self.command != Some(CommandName::Convergence) {
                return Err(usage("--steps-list is only used by `convergence`"));
            }
            if !timestepping {
                return Err(usage("a --steps-list sweep needs a time-stepping --scheme"));
            }
            if self.steps_list.as_ref().is_some_and(|l| l.is_empty() || l.contains(&0)) {
                return Err(usage("--steps-list entries must be positive"));
            }
            if self.levels.as_ref().is_some_and(|l| l.len() != 1) {
                return Err(usage("a --steps-list sweep runs on a single level; pass --n"));
            }
        } else if timestepping && self.steps.is_none() && matches!(self.command, Some(CommandName::Solve | CommandName::Convergence)) {
            return Err(usage(format!("--scheme {:?} needs --steps or --k", self.scheme).to_lowercase()));
        }
        if !timestepping && self.steps.is_some() {
            log::warn!("--steps is ignored by the semidiscrete scheme");
            self.steps = None;
        }
        Ok(())
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            jobs: self.jobs,
            quad_degree: self.quad_order,
            cg: CgOptions {
                rel_tol: self.tol,
                ..Default::default()
            },
            propagator: PropagatorOptions::with_method(match self.propagator {
                PropagatorName::Auto => PropagationMethod::Auto,
                PropagatorName::Eigen => PropagationMethod::Eigen,
                PropagatorName::Krylov => PropagationMethod::Krylov,
                PropagatorName::Substep => PropagationMethod::Substep,
            }),
            record_timing: self.timing,
            ..Default::default()
        }
    }

    pub fn family_at(&self, level: usize) -> MeshFamily {
        match self.family {
            FamilyName::Symmetric => MeshFamily::UniformSymmetric { n: level },
            FamilyName::AlmostSymmetric => MeshFamily::AlmostSymmetric {
                n: level,
                amplitude: self.amplitude,
                seed: self.seed,
            },
            FamilyName::Piecewise => MeshFamily::PiecewiseAlmostSymmetric {
                n: level,
                layout: Subdomain::halves(self.amplitude),
                seed: self.seed,
            },
            FamilyName::Stripes => MeshFamily::CounterexampleStripes { n: level },
            FamilyName::Interface => MeshFamily::CounterexampleInterface { j: level },
        }
    }

    /// The family at its first level.
    pub fn family(&self) -> MeshFamily {
        let level = self.n.or_else(|| self.levels.as_ref().map(|l| l[0])).unwrap_or(8);
        self.family_at(level)
    }

    pub fn levels(&self) -> Vec<usize> {
        self.levels.clone().unwrap_or_else(|| self.n.into_iter().collect())
    }

    pub fn operator(&self) -> OperatorSpec {
        match self.operator {
            OperatorName::Laplacian => OperatorSpec::Laplacian,
            OperatorName::General => {
                let a = self.alpha;
                if a == [1.0, 0.0, 0.0, 1.0] && self.beta == 0.0 {
                    OperatorSpec::GeneralIdentity
                } else {
                    OperatorSpec::Constant {
                        alpha: [[a[0], a[1]], [a[2], a[3]]],
                        beta: self.beta,
                    }
                }
            }
            OperatorName::Smooth => OperatorSpec::Smooth,
            OperatorName::Euler => OperatorSpec::Euler { beta0: self.beta0 },
        }
    }

    /// Initial data as a function; the probe pattern is not one.
    pub fn data_spec(&self) -> Result<DataSpec> {
        Ok(match self.data.expect("resolved") {
            DataName::Smooth => DataSpec::Smooth,
            DataName::Tent => DataSpec::Tent,
            DataName::EulerMode => DataSpec::EulerMode {
                m: self.mode[0],
                n: self.mode[1],
            },
            DataName::RandomL2 => DataSpec::RandomL2 {
                seed: self.seed,
                cells: self.cells,
            },
            DataName::Pattern => return Err(usage("--data pattern is only valid for `probe` and --steps-list sweeps")),
        })
    }

    pub fn projection(&self) -> Projection {
        match self.projection.expect("resolved") {
            ProjectionName::L2 => Projection::L2,
            ProjectionName::Ritz => Projection::Ritz,
            ProjectionName::Interpolant => Projection::Interpolant,
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeName::Semidiscrete => Scheme::Semidiscrete,
            SchemeName::BackwardEuler => Scheme::BackwardEuler,
            SchemeName::CrankNicolson => Scheme::CrankNicolson,
            SchemeName::CnBeStart => Scheme::CnBeStart,
        }
    }

    pub fn probe_config(&self) -> Result<ProbeConfig> {
        let pattern = match self.pattern.expect("resolved") {
            PatternName::Stripes => ProbePattern::StripesAllCells,
            PatternName::Interface => ProbePattern::InterfaceLine,
        };
        ProbeConfig::new(pattern, self.d, self.t).map_err(|e| usage(e.to_string()))
    }

    pub fn probe_data(&self) -> Result<ProbeData> {
        match self.data.expect("resolved") {
            DataName::Pattern => Ok(ProbeData::Pattern {
                config: self.probe_config()?,
            }),
            DataName::RandomL2 => Ok(ProbeData::Projected {
                seed: self.seed,
                cells: self.cells,
            }),
            other => Err(usage(format!("`probe` takes --data pattern or random-l2, not {other:?}").to_lowercase())),
        }
    }

    pub fn reference(&self) -> ErrorReference {
        match self.reference_n {
            Some(n) => ErrorReference::FineMesh { n },
            None => ErrorReference::Exact,
        }
    }
}

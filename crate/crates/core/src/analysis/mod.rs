//! Exact solutions, error norms, convergence tables, the nonsmooth probe and
//! `Q_h` norm estimates, and the refinement studies built from them.

pub mod exact;
pub mod norms;
pub mod probe;
pub mod qnorm;
pub mod rates;
pub mod study;

pub use exact::{EigenSeries, EulerSeparable, ExactSolution, RandomL2, TentProduct};
pub use norms::{error_norms, ErrorNorms, PointLocator};
pub use probe::{probe_nodes, probe_quantity, probe_vector, ProbeConfig, ProbePattern};
pub use qnorm::{qh_norm_estimate, QnormEstimate, QnormOptions};
pub use rates::{fitted_rate, successive_rates, ConvergenceRow, ConvergenceTable, FittedRates, RateAxis};
pub use study::{
    run_probe, run_qnorm, run_single, run_spatial, run_temporal, DataSpec, ErrorReference, OperatorSpec, ProbeData,
    ProbeStudy, Projection, QnormStudy, RunOptions, Scheme, SingleSolve, SolveOutcome, SpatialStudy, TemporalData,
    TemporalStudy,
};

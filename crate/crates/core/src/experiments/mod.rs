//! Random instances, exact ground truth, and solver comparisons.

mod comparison;
mod fit;
mod instance;
mod oracle;

pub use comparison::{
    compare_on, ground_truth, run_comparison, Comparison, GroundTruth, RunSummary, TruthSource,
};
pub use fit::{fit_rate, RateFit, DEFAULT_TAIL_FRACTION, ERROR_FLOOR, MIN_FIT_POINTS};
pub use instance::{generate_instance, AutoSteps, CouplingSpec, ExperimentSpec, MatrixKind, Steps};
pub use oracle::{qp_oracle, KktResiduals, OracleSolution, MAX_ORACLE_DIM, ORACLE_TOL};

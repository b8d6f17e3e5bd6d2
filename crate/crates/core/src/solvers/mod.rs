//! Decentralized and centralized iterations plus the rate machinery.

mod centralized;
mod config;
mod fixed_point;
mod general;
mod lyapunov;
mod ped2;
mod rate;
mod run;
mod state;

pub use centralized::{centralized_prox_ascent_step, centralized_step, CentralState};
pub use config::{Mode, SolverConfig, DEFAULT_MAX_ITER, DEFAULT_STOP_TOL, DIVERGENCE_NORM};
pub use fixed_point::{
    build_fixed_point, fixed_point_residuals, kkt_residual, FixedPoint, FIXED_POINT_TOL, KKT_TOL,
};
pub use general::general_step;
pub use lyapunov::{
    energy_identity_check, energy_identity_check_with_cy, energy_identity_sides, lyapunov_terms,
    lyapunov_value, x_blocks, LyapunovTerms,
};
pub use ped2::{
    agent_combine, agent_local_update, ped2_step, ped2_step_with, DirectExchange, Exchange,
};
pub use rate::{
    gamma_terms, rate_report, step_size_bounds, RateReport, StepSizeBounds, MU_Y_SAFETY,
};
pub use run::{
    run_centralized, run_network, solve, write_log_error, write_trace_csv, Reference, RunResult,
    TraceRow,
};
pub use state::{ped2_init, AgentState, NetworkState};

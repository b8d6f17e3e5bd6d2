use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;
use crate::graph::CombinationSet;
use crate::problem::SharingProblem;
use crate::serde_util;
use crate::solvers::{
    build_fixed_point, ped2_init, rate_report, run_centralized, run_network, CentralState, Mode,
    RateReport, Reference, RunResult, SolverConfig, TraceRow,
};

use super::fit::{fit_rate, RateFit, DEFAULT_TAIL_FRACTION};
use super::instance::{generate_instance, ExperimentSpec};
use super::oracle::{qp_oracle, OracleSolution, MAX_ORACLE_DIM};

/// Long-run fallback settings when no exact oracle applies.
const LONG_RUN_FACTOR: usize = 10;
const LONG_RUN_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    QpOracle,
    LongRun,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundTruth {
    #[serde(serialize_with = "serde_util::dvec::serialize")]
    pub w_star: DVector<f64>,
    #[serde(serialize_with = "serde_util::dvec::serialize")]
    pub y_star: DVector<f64>,
    pub source: TruthSource,
    pub oracle: Option<OracleSolution>,
}

/// Exact oracle when the problem admits one, otherwise a long decentralized
/// run (ten times the budget, tolerance 1e-13) with `y★` the agent average.
pub fn ground_truth(
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
) -> Result<GroundTruth> {
    let quadratic = problem
        .agents()
        .iter()
        .all(|a| a.cost.as_quadratic().is_some());
    if quadratic && problem.coupling_dim() <= MAX_ORACLE_DIM {
        if let Ok(sol) = qp_oracle(problem) {
            return Ok(GroundTruth {
                w_star: sol.w_star.clone(),
                y_star: sol.y_star.clone(),
                source: TruthSource::QpOracle,
                oracle: Some(sol),
            });
        }
    }
    let long = config
        .clone()
        .with_mode(Mode::Ped2)
        .with_max_iter(config.max_iter.saturating_mul(LONG_RUN_FACTOR))
        .with_stop_tol(LONG_RUN_TOL);
    let init = ped2_init(problem, cs, &long, None, None)?;
    let run = run_network(problem, cs, &long, init, None)?;
    let state = run.network.expect("network run");
    Ok(GroundTruth {
        w_star: state.stacked_w(),
        y_star: state.mean_y(),
        source: TruthSource::LongRun,
        oracle: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub solver: &'static str,
    pub iterations: usize,
    pub converged: bool,
    pub final_sq_err: f64,
    pub fit: Option<RateFit>,
    /// `ln γ` when the instance is certified.
    pub theoretical_log_gamma: Option<f64>,
    pub iters_to_1e_10: Option<usize>,
    pub initialization: &'static str,
}

impl RunSummary {
    fn from_run(run: &RunResult, rate: Option<&RateReport>) -> Self {
        let errors: Vec<f64> = run.trace.iter().map(|r| r.sq_err_w).collect();
        Self {
            solver: run.mode.label(),
            iterations: run.iterations,
            converged: run.converged,
            final_sq_err: errors.last().copied().unwrap_or(f64::NAN),
            fit: fit_rate(&errors, DEFAULT_TAIL_FRACTION).ok(),
            theoretical_log_gamma: rate.filter(|r| r.certified).map(|r| r.gamma.ln()),
            iters_to_1e_10: run
                .trace
                .iter()
                .find(|r| r.sq_err_w <= 1e-10)
                .map(|r| r.iter),
            initialization: "zero",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    /// Absent when the instance was supplied directly.
    pub spec: Option<ExperimentSpec>,
    pub config: SolverConfig,
    pub truth_source: TruthSource,
    pub rate: RateReport,
    pub ped2: RunSummary,
    pub central: RunSummary,
    #[serde(skip)]
    pub ped2_trace: Vec<TraceRow>,
    #[serde(skip)]
    pub central_trace: Vec<TraceRow>,
    #[serde(skip)]
    pub truth: GroundTruth,
}

/// Generates the instance and runs the decentralized and centralized
/// solvers from zero with identical steps.
pub fn run_comparison(spec: &ExperimentSpec) -> Result<Comparison> {
    let (problem, topology) = generate_instance(spec)?;
    let cs = CombinationSet::from_topology(&topology)?;
    let config = spec.solver_config(&problem)?;
    compare_on(Some(spec), &problem, &cs, &config)
}

/// As [`run_comparison`] on a given instance. The decentralized run uses
/// `config.mode` unless that is the centralized mode, in which case the
/// agentwise recursion is used.
pub fn compare_on(
    spec: Option<&ExperimentSpec>,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
) -> Result<Comparison> {
    let truth = ground_truth(problem, cs, config)?;
    let net_mode = match config.mode {
        Mode::Centralized => Mode::Ped2,
        m => m,
    };
    let owned_cs;
    let cs = if net_mode == Mode::GeneralForm && cs.l().is_none() {
        owned_cs = cs.clone().with_l();
        &owned_cs
    } else {
        cs
    };
    let ped2_cfg = config.clone().with_mode(net_mode);
    let init = ped2_init(problem, cs, &ped2_cfg, None, None)?;
    let fp = build_fixed_point(problem, cs, &ped2_cfg, &truth.w_star, &truth.y_star).ok();
    let rate = rate_report(problem, cs, &ped2_cfg, fp.as_ref().map(|f| (f, &init)))?;

    let reference = Reference {
        w_star: &truth.w_star,
        y_star: &truth.y_star,
        fixed_point: fp.as_ref(),
        rate: rate.certified.then_some(&rate),
    };
    let ped2_run = run_network(problem, cs, &ped2_cfg, init, Some(&reference))?;
    let central_cfg = config.clone().with_mode(Mode::Centralized);
    let central_ref = Reference {
        fixed_point: None,
        rate: None,
        ..reference
    };
    let central_run = run_centralized(
        problem,
        &central_cfg,
        CentralState::zeros(problem),
        Some(&central_ref),
    )?;

    Ok(Comparison {
        spec: spec.cloned(),
        config: config.clone(),
        truth_source: truth.source,
        ped2: RunSummary::from_run(&ped2_run, Some(&rate)),
        central: RunSummary::from_run(&central_run, None),
        rate,
        ped2_trace: ped2_run.trace,
        central_trace: central_run.trace,
        truth,
    })
}

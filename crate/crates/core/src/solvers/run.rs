//! Iteration driver and per-iteration traces.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;
use crate::graph::CombinationSet;
use crate::problem::SharingProblem;

use super::centralized::{centralized_step, CentralState};
use super::config::{Mode, SolverConfig};
use super::fixed_point::FixedPoint;
use super::general::general_step;
use super::lyapunov::lyapunov_value;
use super::ped2::ped2_step;
use super::rate::RateReport;
use super::state::{ped2_init, NetworkState};

/// Ground truth used to score a run.
#[derive(Debug, Clone, Copy)]
pub struct Reference<'a> {
    pub w_star: &'a DVector<f64>,
    pub y_star: &'a DVector<f64>,
    pub fixed_point: Option<&'a FixedPoint>,
    pub rate: Option<&'a RateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub sq_err_w: f64,
    pub sq_err_y: f64,
    #[serde(rename = "lyapunov_V")]
    pub lyapunov_v: Option<f64>,
    #[serde(rename = "bound_gamma_pow_i_Co")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub mode: Mode,
    pub w: DVector<f64>,
    /// Final network state for decentralized modes.
    pub network: Option<NetworkState>,
    /// Final `(w, λ)` for the centralized mode.
    pub central: Option<CentralState>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

fn network_row(
    state: &NetworkState,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    r: &Reference<'_>,
) -> Result<TraceRow> {
    let i = state.iter - 1;
    let sq_err_w = (state.stacked_w() - r.w_star).norm_squared();
    let sq_err_y = state
        .agents
        .iter()
        .map(|a| (&a.y - r.y_star).norm_squared())
        .sum();
    let lyapunov_v = match r.fixed_point {
        Some(fp) => Some(lyapunov_value(state, fp, problem, cs, config)?),
        None => None,
    };
    Ok(TraceRow {
        iter: i,
        sq_err_w,
        sq_err_y,
        lyapunov_v,
        bound: r.rate.and_then(|rr| rr.bound(i)),
    })
}

/// Runs a decentralized mode (`Ped2` or `GeneralForm`) from `init`.
pub fn run_network(
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    init: NetworkState,
    reference: Option<&Reference<'_>>,
) -> Result<RunResult> {
    config.validate()?;
    let mut state = init;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut done = 0;
    while done < config.max_iter {
        let next = match config.mode {
            Mode::GeneralForm => general_step(&state, problem, cs, config)?,
            _ => ped2_step(&state, problem, cs, config)?,
        };
        done += 1;
        let change = next
            .agents
            .iter()
            .zip(&state.agents)
            .map(|(a, b)| (&a.w - &b.w).amax())
            .fold(0.0, f64::max);
        state = next;
        if let Some(r) = reference {
            trace.push(network_row(&state, problem, cs, config, r)?);
        }
        if change <= config.stop_tol {
            converged = true;
            break;
        }
    }
    Ok(RunResult {
        mode: config.mode,
        w: state.stacked_w(),
        network: Some(state),
        central: None,
        iterations: done,
        converged,
        trace,
    })
}

pub fn run_centralized(
    problem: &SharingProblem,
    config: &SolverConfig,
    init: CentralState,
    reference: Option<&Reference<'_>>,
) -> Result<RunResult> {
    config.validate()?;
    let mut state = init;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut done = 0;
    while done < config.max_iter {
        let next = centralized_step(&state, problem, config)?;
        done += 1;
        let change = (&next.w - &state.w).amax();
        state = next;
        if let Some(r) = reference {
            trace.push(TraceRow {
                iter: state.iter - 1,
                sq_err_w: (&state.w - r.w_star).norm_squared(),
                sq_err_y: (&state.lambda - r.y_star).norm_squared(),
                lyapunov_v: None,
                bound: None,
            });
        }
        if change <= config.stop_tol {
            converged = true;
            break;
        }
    }
    Ok(RunResult {
        mode: Mode::Centralized,
        w: state.w.clone(),
        network: None,
        central: Some(state),
        iterations: done,
        converged,
        trace,
    })
}

/// Runs `config.mode` from zero initialization.
pub fn solve(
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    reference: Option<&Reference<'_>>,
) -> Result<RunResult> {
    match config.mode {
        Mode::Centralized => {
            run_centralized(problem, config, CentralState::zeros(problem), reference)
        }
        Mode::Ped2 | Mode::GeneralForm => {
            let init = ped2_init(problem, cs, config, None, None)?;
            if config.mode == Mode::GeneralForm && cs.l().is_none() {
                let cs = cs.clone().with_l();
                return run_network(problem, &cs, config, init, reference);
            }
            run_network(problem, cs, config, init, reference)
        }
    }
}

/// CSV with header `iter,sq_err_w,sq_err_y,lyapunov_V,bound_gamma_pow_i_Co`;
/// unavailable columns are left empty.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    if rows.is_empty() {
        wtr.write_record([
            "iter",
            "sq_err_w",
            "sq_err_y",
            "lyapunov_V",
            "bound_gamma_pow_i_Co",
        ])?;
    }
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Two columns, `iter log10(sq_err_w)`, for gnuplot.
pub fn write_log_error<W: Write>(rows: &[TraceRow], mut out: W) -> Result<()> {
    writeln!(out, "# iter log10_sq_err_w")?;
    for row in rows {
        writeln!(out, "{} {}", row.iter, row.sq_err_w.log10())?;
    }
    Ok(())
}

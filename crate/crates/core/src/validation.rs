//! Aggregated hypothesis checks for a problem on a network.

use serde::Serialize;

use crate::error::Result;
use crate::graph::{CombinationReport, CombinationSet};
use crate::linalg::max_abs;
use crate::problem::{InteriorCheck, Moduli, SharingProblem};
use crate::solvers::{step_size_bounds, SolverConfig, StepSizeBounds};

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct StepCheck {
    pub mu_w: f64,
    pub mu_y: f64,
    pub bounds: StepSizeBounds,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub doubly_stochastic: bool,
    /// Largest of `|A − Aᵀ|`, `|A𝟙 − 𝟙|`, `|Aᵀ𝟙 − 𝟙|`.
    pub stochastic_error: f64,
    pub combination: CombinationReport,
    pub full_row_rank: bool,
    pub rank_deficient_agents: Vec<usize>,
    pub strongly_convex: bool,
    pub moduli: Option<Moduli>,
    pub relative_interior: InteriorCheck,
    pub steps: Option<StepCheck>,
    pub ok: bool,
}

/// Runs every structural check. Step sizes are checked only when a
/// configuration is supplied.
pub fn validate(
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: Option<&SolverConfig>,
) -> Result<ValidationReport> {
    let a = cs.a();
    let row_err = a
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let col_err = a
        .column_iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let stochastic_error = max_abs(&(a - a.transpose())).max(row_err).max(col_err);
    let doubly_stochastic = stochastic_error <= STOCHASTIC_TOL && a.iter().all(|&v| v >= 0.0);

    let combination = cs.check_combination();
    let rank_deficient_agents = problem.rank_deficient_agents()?;
    let moduli = problem.aggregate_moduli().ok();
    let relative_interior = problem.check_relative_interior(None)?;

    let steps = match (config, moduli) {
        (Some(cfg), Some(_)) => {
            let bounds = step_size_bounds(problem)?;
            Some(StepCheck {
                mu_w: cfg.mu_w,
                mu_y: cfg.mu_y,
                ok: bounds.admits(cfg.mu_w, cfg.mu_y),
                bounds,
            })
        }
        _ => None,
    };

    let ok = doubly_stochastic
        && combination.ok
        && rank_deficient_agents.is_empty()
        && moduli.is_some()
        && relative_interior.ok
        && steps.as_ref().is_none_or(|s| s.ok);
    Ok(ValidationReport {
        doubly_stochastic,
        stochastic_error,
        combination,
        full_row_rank: rank_deficient_agents.is_empty(),
        rank_deficient_agents,
        strongly_convex: moduli.is_some(),
        moduli,
        relative_interior,
        steps,
        ok,
    })
}

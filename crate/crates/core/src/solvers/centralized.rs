use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::problem::SharingProblem;

use super::config::{SolverConfig, DIVERGENCE_NORM};

#[derive(Debug, Clone, PartialEq)]
pub struct CentralState {
    pub w: DVector<f64>,
    pub lambda: DVector<f64>,
    pub iter: usize,
}

impl CentralState {
    pub fn zeros(problem: &SharingProblem) -> Self {
        Self {
            w: DVector::zeros(problem.primal_dim()),
            lambda: DVector::zeros(problem.coupling_dim()),
            iter: 0,
        }
    }
}

/// Linearized prox-ascent with a central coordinator:
///
/// ```text
/// w ← w − μ_w ∇J(w) − μ_w Bᵀλ
/// λ ← prox_{μ_y g*}(λ + μ_y B w)
/// ```
///
/// The prox uses the full step `μ_y`, unlike the agentwise `μ_y/K`.
pub fn centralized_prox_ascent_step(
    w: &DVector<f64>,
    lambda: &DVector<f64>,
    problem: &SharingProblem,
    config: &SolverConfig,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_dim("dual vector", problem.coupling_dim(), lambda.len())?;
    let grad = problem.grad_j(w)?;
    let blocks = problem.split_primal(w)?;
    let mut bt_lambda = DVector::zeros(problem.primal_dim());
    let mut offset = 0;
    for (spec, _) in problem.agents().iter().zip(&blocks) {
        bt_lambda
            .rows_mut(offset, spec.dim())
            .copy_from(&(spec.b.transpose() * lambda));
        offset += spec.dim();
    }
    let w_new = w - (grad + bt_lambda) * config.mu_w;
    let arg = lambda + problem.apply_b(&w_new)? * config.mu_y;
    let lambda_new = problem.coupling().prox_conjugate(config.mu_y, &arg)?;
    Ok((w_new, lambda_new))
}

pub fn centralized_step(
    state: &CentralState,
    problem: &SharingProblem,
    config: &SolverConfig,
) -> Result<CentralState> {
    let (w, lambda) = centralized_prox_ascent_step(&state.w, &state.lambda, problem, config)?;
    let iter = state.iter + 1;
    let norm = w.amax().max(lambda.amax());
    if !norm.is_finite() || w.iter().chain(lambda.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            iter,
            norm: f64::INFINITY,
        });
    }
    if norm > DIVERGENCE_NORM {
        return Err(Error::Divergence { iter, norm });
    }
    Ok(CentralState { w, lambda, iter })
}

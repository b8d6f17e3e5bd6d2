//! Error-energy bookkeeping around a fixed point.
//!
//! With `w̃ = w − w°` (and likewise for `y`, `z`, `x`) and `c_y = μ_w/μ_y`:
//!
//! ```text
//! V_i = ‖w̃_i‖²_{I − μ_yμ_w B_dᵀB_d} + c_y‖ỹ_i‖² + c_y‖x̃_i‖²
//! ```
//!
//! and the one-step energy identity
//!
//! ```text
//! ‖w̃_i‖²_{I−μ_yμ_wB_dᵀB_d} + c_y‖z̃_i‖²_{I−L²} + c_y‖x̃_i‖²
//!   = ‖w̃_{i−1} − μ_w(∇J(w_{i−1}) − ∇J(w°))‖²
//!     + c_y‖ỹ_{i−1}‖²_{I−μ_wμ_yB_dB_dᵀ} + c_y‖x̃_{i−1}‖²_{I−L²}
//! ```
//!
//! holds exactly for every iterate of the general form.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::graph::CombinationSet;
use crate::linalg::kron_apply;
use crate::problem::SharingProblem;

use super::config::SolverConfig;
use super::fixed_point::FixedPoint;
use super::state::NetworkState;

fn diff_blocks(a: &[DVector<f64>], b: &[DVector<f64>]) -> Vec<DVector<f64>> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn sq_norm(blocks: &[DVector<f64>]) -> f64 {
    blocks.iter().map(|b| b.norm_squared()).sum()
}

/// `vᵀ (M ⊗ I) v`.
fn kron_quad(m: &nalgebra::DMatrix<f64>, blocks: &[DVector<f64>]) -> f64 {
    kron_apply(m, blocks)
        .iter()
        .zip(blocks)
        .map(|(a, b)| a.dot(b))
        .sum()
}

/// The auxiliary iterate of `state`: stored explicitly in general-form runs,
/// otherwise recovered as the range-space solution of `L x = φ − ψ`.
pub fn x_blocks(state: &NetworkState, cs: &CombinationSet) -> Vec<DVector<f64>> {
    match &state.x {
        Some(x) => x.clone(),
        None => {
            let diff: Vec<_> = state.agents.iter().map(|a| &a.phi - &a.psi).collect();
            kron_apply(&cs.l_pseudo_inverse(), &diff)
        }
    }
}

/// `‖w̃‖²_{I − μ_yμ_w B_dᵀB_d}`.
fn primal_energy(problem: &SharingProblem, config: &SolverConfig, w_err: &[DVector<f64>]) -> f64 {
    let mm = config.mu_y * config.mu_w;
    problem
        .agents()
        .iter()
        .zip(w_err)
        .map(|(spec, e)| e.norm_squared() - mm * (&spec.b * e).norm_squared())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovTerms {
    pub primal: f64,
    pub dual: f64,
    pub aux: f64,
}

impl LyapunovTerms {
    pub fn total(&self) -> f64 {
        self.primal + self.dual + self.aux
    }
}

pub fn lyapunov_terms(
    state: &NetworkState,
    fp: &FixedPoint,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
) -> Result<LyapunovTerms> {
    check_dim(
        "network state agents",
        problem.num_agents(),
        state.agents.len(),
    )?;
    let c_y = config.c_y();
    let w_err = diff_blocks(&state.w_blocks(), &fp.w_blocks(problem));
    let y_err = diff_blocks(&state.y_blocks(), &fp.y);
    let x_err = diff_blocks(&x_blocks(state, cs), &fp.x);
    Ok(LyapunovTerms {
        primal: primal_energy(problem, config, &w_err),
        dual: c_y * sq_norm(&y_err),
        aux: c_y * sq_norm(&x_err),
    })
}

pub fn lyapunov_value(
    state: &NetworkState,
    fp: &FixedPoint,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
) -> Result<f64> {
    Ok(lyapunov_terms(state, fp, problem, cs, config)?.total())
}

/// Both sides of the energy identity for the transition `prev → next`.
pub fn energy_identity_sides(
    prev: &NetworkState,
    next: &NetworkState,
    fp: &FixedPoint,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    c_y: f64,
) -> Result<(f64, f64)> {
    let (Some(x_prev), Some(x_next)) = (&prev.x, &next.x) else {
        return Err(Error::MissingOperator(
            "explicit x iterate (general-form trace)",
        ));
    };
    let w_o = fp.w_blocks(problem);
    let mm = config.mu_y * config.mu_w;
    let abar = cs.abar();

    let w_err = diff_blocks(&next.w_blocks(), &w_o);
    let z_err = diff_blocks(&next.z_blocks(), &fp.z);
    let x_err = diff_blocks(x_next, &fp.x);
    let lhs = primal_energy(problem, config, &w_err)
        + c_y * kron_quad(abar, &z_err)
        + c_y * sq_norm(&x_err);

    let mut grad_term = 0.0;
    let mut dual_term = 0.0;
    for (k, spec) in problem.agents().iter().enumerate() {
        let wp = &prev.agents[k].w;
        let g_diff = spec.cost.gradient(wp) - spec.cost.gradient(&w_o[k]);
        grad_term += (wp - &w_o[k] - g_diff * config.mu_w).norm_squared();
        let ye = &prev.agents[k].y - &fp.y[k];
        dual_term += ye.norm_squared() - mm * (spec.b.transpose() * &ye).norm_squared();
    }
    let xp_err = diff_blocks(x_prev, &fp.x);
    let rhs = grad_term + c_y * dual_term + c_y * kron_quad(abar, &xp_err);
    Ok((lhs, rhs))
}

/// Largest relative violation `|LHS − RHS| / (1 + |RHS|)` of the energy
/// identity along a general-form trace (`trace[0]` is the initial state).
pub fn energy_identity_check(
    trace: &[NetworkState],
    fp: &FixedPoint,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
) -> Result<f64> {
    energy_identity_check_with_cy(trace, fp, problem, cs, config, config.c_y())
}

/// As [`energy_identity_check`] with an arbitrary dual weight; any value other than
/// `μ_w/μ_y` breaks the identity.
pub fn energy_identity_check_with_cy(
    trace: &[NetworkState],
    fp: &FixedPoint,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    c_y: f64,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for pair in trace.windows(2) {
        let (lhs, rhs) = energy_identity_sides(&pair[0], &pair[1], fp, problem, cs, config, c_y)?;
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    Ok(worst)
}

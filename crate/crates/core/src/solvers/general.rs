use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::graph::CombinationSet;
use crate::linalg::kron_apply;
use crate::problem::SharingProblem;

use super::config::SolverConfig;
use super::state::{AgentState, NetworkState};

/// One round of the primal-dual iteration with the auxiliary variable kept
/// explicitly:
///
/// ```text
/// w ← w − μ_w ∇J(w) − μ_w B_dᵀ y
/// z ← y + μ_y B_d w + L x
/// x ← x − L z
/// y ← prox_{μ_y G*}(Ā z)
/// ```
///
/// `ψ` and `φ` are filled in as well (`ψ = y_prev + μ_y B_d w`, `φ = Ā z`),
/// so the result can be continued by the decentralized recursion.
pub fn general_step(
    state: &NetworkState,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
) -> Result<NetworkState> {
    let k_agents = problem.num_agents();
    check_dim("network state agents", k_agents, state.agents.len())?;
    let l = cs.l().ok_or(Error::MissingOperator(
        "materialized L (call CombinationSet::with_l)",
    ))?;
    let x_prev = state.x.as_ref().ok_or(Error::MissingOperator(
        "explicit x iterate (general-form state)",
    ))?;

    let mut w_new = Vec::with_capacity(k_agents);
    let mut psi = Vec::with_capacity(k_agents);
    for (spec, st) in problem.agents().iter().zip(&state.agents) {
        let grad = spec.cost.gradient(&st.w) + spec.b.transpose() * &st.y;
        let w = &st.w - grad * config.mu_w;
        psi.push(&st.y + &spec.b * &w * config.mu_y);
        w_new.push(w);
    }

    let lx = kron_apply(l, x_prev);
    let z: Vec<DVector<f64>> = psi.iter().zip(&lx).map(|(p, q)| p + q).collect();
    let lz = kron_apply(l, &z);
    let x: Vec<DVector<f64>> = x_prev.iter().zip(&lz).map(|(a, b)| a - b).collect();
    let phi = kron_apply(cs.abar(), &z);

    let prox_step = config.mu_y / k_agents as f64;
    let g = problem.coupling();
    let agents = w_new
        .into_iter()
        .zip(psi)
        .zip(z)
        .zip(phi)
        .map(|(((w, psi), z), phi)| AgentState {
            y: g.prox_conjugate_unchecked(prox_step, &phi),
            w,
            psi,
            phi,
            z,
        })
        .collect();

    let next = NetworkState {
        agents,
        x: Some(x),
        iter: state.iter + 1,
    };
    next.check_divergence()?;
    Ok(next)
}

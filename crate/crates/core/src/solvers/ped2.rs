//! The decentralized recursion. Each round every agent
//!
//! 1. takes a primal gradient step using its own dual copy,
//! 2. forms `ψ = y + μ_y B_k w` and the correction `z = φ_prev + ψ − ψ_prev`,
//! 3. exchanges `z` with its neighbors once and combines `φ = Σ ā_sk z_s`,
//! 4. applies the scaled conjugate prox `y = prox_{(μ_y/K) g*}(φ)`.
//!
//! Step 3 is a barrier: all agents finish step 2 before any agent reads a
//! neighbor's `z`.

use nalgebra::DVector;

use crate::error::{check_dim, Result};
use crate::graph::CombinationSet;
use crate::problem::{AgentSpec, CouplingFunction, SharingProblem};

use super::config::SolverConfig;
use super::state::{AgentState, NetworkState};

/// Delivery of the round's `z` messages. `fetch` is called once for every
/// `(receiver, sender)` pair with `sender ∈ N_receiver`.
pub trait Exchange {
    fn fetch<'a>(
        &mut self,
        receiver: usize,
        sender: usize,
        outbox: &'a [DVector<f64>],
    ) -> &'a DVector<f64>;
}

/// Reads straight from the shared outbox.
#[derive(Debug, Default, Clone, Copy)]
pub struct DirectExchange;

impl Exchange for DirectExchange {
    fn fetch<'a>(
        &mut self,
        _receiver: usize,
        sender: usize,
        outbox: &'a [DVector<f64>],
    ) -> &'a DVector<f64> {
        &outbox[sender]
    }
}

/// Steps 1–2 for one agent; depends only on that agent's data.
pub fn agent_local_update(
    agent: &AgentSpec,
    state: &AgentState,
    config: &SolverConfig,
) -> AgentState {
    let grad = agent.cost.gradient(&state.w) + agent.b.transpose() * &state.y;
    let w = &state.w - grad * config.mu_w;
    let psi = &state.y + &agent.b * &w * config.mu_y;
    let z = &state.phi + &psi - &state.psi;
    AgentState {
        w,
        y: state.y.clone(),
        psi,
        phi: state.phi.clone(),
        z,
    }
}

/// Steps 3–4 for agent `k`: combine neighbor messages and apply the prox.
pub fn agent_combine<X: Exchange + ?Sized>(
    k: usize,
    cs: &CombinationSet,
    g: &CouplingFunction,
    prox_step: f64,
    outbox: &[DVector<f64>],
    exchange: &mut X,
) -> (DVector<f64>, DVector<f64>) {
    let abar = cs.abar();
    let mut phi = DVector::zeros(outbox[k].len());
    for &s in cs.neighborhood(k) {
        let z_s = exchange.fetch(k, s, outbox);
        phi.axpy(abar[(s, k)], z_s, 1.0);
    }
    let y = g.prox_conjugate_unchecked(prox_step, &phi);
    (phi, y)
}

pub fn ped2_step(
    state: &NetworkState,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
) -> Result<NetworkState> {
    ped2_step_with(state, problem, cs, config, &mut DirectExchange)
}

/// One synchronous round, routing every neighbor read through `exchange`.
pub fn ped2_step_with<X: Exchange + ?Sized>(
    state: &NetworkState,
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    exchange: &mut X,
) -> Result<NetworkState> {
    let k_agents = problem.num_agents();
    check_dim("network state agents", k_agents, state.agents.len())?;
    check_dim("combination matrix size", k_agents, cs.num_agents())?;

    let mut agents: Vec<AgentState> = problem
        .agents()
        .iter()
        .zip(&state.agents)
        .map(|(spec, st)| agent_local_update(spec, st, config))
        .collect();

    // barrier: every z of this round is now in the outbox
    let outbox: Vec<DVector<f64>> = agents.iter().map(|a| a.z.clone()).collect();
    let prox_step = config.mu_y / k_agents as f64;
    for (k, agent) in agents.iter_mut().enumerate() {
        let (phi, y) = agent_combine(k, cs, problem.coupling(), prox_step, &outbox, exchange);
        agent.phi = phi;
        agent.y = y;
    }

    let next = NetworkState {
        agents,
        x: None,
        iter: state.iter + 1,
    };
    next.check_divergence()?;
    Ok(next)
}

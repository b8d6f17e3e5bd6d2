use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::graph::CombinationSet;
use crate::linalg::{stack, unstack};
use crate::problem::SharingProblem;

use super::config::{Mode, SolverConfig, DIVERGENCE_NORM};

/// Per-agent iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub w: DVector<f64>,
    /// Local copy of the dual variable.
    pub y: DVector<f64>,
    pub psi: DVector<f64>,
    pub phi: DVector<f64>,
    /// The message exchanged with neighbors each round.
    pub z: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub agents: Vec<AgentState>,
    /// Auxiliary iterate (K blocks of length E), only kept in general-form runs.
    pub x: Option<Vec<DVector<f64>>>,
    /// Number of completed rounds.
    pub iter: usize,
}

impl NetworkState {
    pub fn stacked_w(&self) -> DVector<f64> {
        stack(&self.w_blocks())
    }

    pub fn w_blocks(&self) -> Vec<DVector<f64>> {
        self.agents.iter().map(|a| a.w.clone()).collect()
    }

    pub fn y_blocks(&self) -> Vec<DVector<f64>> {
        self.agents.iter().map(|a| a.y.clone()).collect()
    }

    pub fn z_blocks(&self) -> Vec<DVector<f64>> {
        self.agents.iter().map(|a| a.z.clone()).collect()
    }

    pub fn stacked_y(&self) -> DVector<f64> {
        stack(&self.y_blocks())
    }

    /// Agent average of the dual copies.
    pub fn mean_y(&self) -> DVector<f64> {
        let k = self.agents.len() as f64;
        let mut acc = DVector::zeros(self.agents[0].y.len());
        for a in &self.agents {
            acc += &a.y;
        }
        acc / k
    }

    /// `max_k ‖y_k − ȳ‖`.
    pub fn dual_disagreement(&self) -> f64 {
        let mean = self.mean_y();
        self.agents
            .iter()
            .map(|a| (&a.y - &mean).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_divergence(&self) -> Result<()> {
        let mut norm = 0.0_f64;
        let fields = self
            .agents
            .iter()
            .flat_map(|a| [&a.w, &a.y, &a.psi, &a.phi, &a.z]);
        for v in fields.chain(self.x.iter().flatten()) {
            let n = v.amax();
            if !n.is_finite() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence {
                    iter: self.iter,
                    norm: f64::INFINITY,
                });
            }
            norm = norm.max(n);
        }
        if norm > DIVERGENCE_NORM {
            return Err(Error::Divergence {
                iter: self.iter,
                norm,
            });
        }
        Ok(())
    }
}

/// Initial state for the decentralized solvers: `w₋₁`, `y₋₁` from the
/// inputs (zero when absent), `ψ₋₁ = φ₋₁ = 0`, and `x₋₁ = 0` in general-form
/// mode.
pub fn ped2_init(
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    w_init: Option<&DVector<f64>>,
    y_init: Option<&DVector<f64>>,
) -> Result<NetworkState> {
    let k = problem.num_agents();
    let e = problem.coupling_dim();
    check_dim("combination matrix size", k, cs.num_agents())?;
    let w_blocks = match w_init {
        Some(w) => problem.split_primal(w)?,
        None => problem
            .block_sizes()
            .into_iter()
            .map(DVector::zeros)
            .collect(),
    };
    let y_blocks = match y_init {
        Some(y) => {
            check_dim("stacked dual vector", e * k, y.len())?;
            unstack(y, &vec![e; k])
        }
        None => vec![DVector::zeros(e); k],
    };
    let agents = w_blocks
        .into_iter()
        .zip(y_blocks)
        .map(|(w, y)| AgentState {
            w,
            y,
            psi: DVector::zeros(e),
            phi: DVector::zeros(e),
            z: DVector::zeros(e),
        })
        .collect();
    let x = (config.mode == Mode::GeneralForm).then(|| vec![DVector::zeros(e); k]);
    Ok(NetworkState { agents, x, iter: 0 })
}

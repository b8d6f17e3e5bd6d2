use nalgebra::{DMatrix, DVector};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::problem::{AgentSpec, CouplingFunction, SharingProblem};
use crate::solvers::{step_size_bounds, SolverConfig, DEFAULT_STOP_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSpec {
    /// `Σ B_k w_k ≤ b` with `b ~ U(0, 1)`.
    UpperBound,
    /// `Σ B_k w_k = b` with `b ~ U(0, 1)`.
    Equality,
    Zero,
    L1 {
        lambda: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// `B_k = I` (requires `coupling_dim == local_dim`).
    Identity,
    /// Standard normal entries; full row rank almost surely when E ≤ Q_k.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoSteps {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Steps {
    Fixed {
        mu_w: f64,
        mu_y: f64,
    },
    /// Largest admissible `μ_w` and the safety factor times the `μ_y` bound.
    Auto(AutoSteps),
}

fn default_edge_probability() -> f64 {
    0.3
}

fn default_steps() -> Steps {
    Steps::Auto(AutoSteps::Auto)
}

fn default_stop_tol() -> f64 {
    DEFAULT_STOP_TOL
}

/// Everything needed to regenerate an instance and its runs bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub agents: usize,
    pub local_dim: usize,
    pub coupling_dim: usize,
    pub coupling: CouplingSpec,
    pub coupling_matrices: MatrixKind,
    pub graph_seed: u64,
    #[serde(default = "default_edge_probability")]
    pub edge_probability: f64,
    pub cost_seed: u64,
    #[serde(default = "default_steps")]
    pub steps: Steps,
    pub max_iter: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
}

impl ExperimentSpec {
    /// Twenty agents with 10-dimensional quadratic costs, `B_k = I`,
    /// `Σ w_k ≤ b`, `μ_w = 0.03`, `μ_y = 2`.
    pub fn demo(graph_seed: u64, cost_seed: u64) -> Self {
        Self {
            agents: 20,
            local_dim: 10,
            coupling_dim: 10,
            coupling: CouplingSpec::UpperBound,
            coupling_matrices: MatrixKind::Identity,
            graph_seed,
            edge_probability: 0.3,
            cost_seed,
            steps: Steps::Fixed {
                mu_w: 0.03,
                mu_y: 2.0,
            },
            max_iter: 5000,
            stop_tol: DEFAULT_STOP_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 || self.local_dim == 0 || self.coupling_dim == 0 {
            return Err(Error::InvalidInput(
                "agents, local_dim and coupling_dim must be positive".into(),
            ));
        }
        if self.coupling_matrices == MatrixKind::Identity && self.coupling_dim != self.local_dim {
            return Err(Error::InvalidInput(format!(
                "identity coupling matrices need coupling_dim == local_dim ({} != {})",
                self.coupling_dim, self.local_dim
            )));
        }
        if let CouplingSpec::L1 { lambda } = self.coupling {
            if !(lambda >= 0.0) {
                return Err(Error::InvalidInput("l1 weight must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Solver configuration for this experiment, resolving `auto` steps
    /// against the generated problem.
    pub fn solver_config(&self, problem: &SharingProblem) -> Result<SolverConfig> {
        let (mu_w, mu_y) = match self.steps {
            Steps::Fixed { mu_w, mu_y } => (mu_w, mu_y),
            Steps::Auto(_) => step_size_bounds(problem)?.auto(),
        };
        Ok(SolverConfig::new(mu_w, mu_y)?
            .with_max_iter(self.max_iter)
            .with_stop_tol(self.stop_tol))
    }
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Draws the costs (`R_k = MᵀM + I`, `r_k` standard normal), coupling
/// matrices, `b`, and a connected Erdős–Rényi topology.
pub fn generate_instance(spec: &ExperimentSpec) -> Result<(SharingProblem, Topology)> {
    spec.validate()?;
    let q = spec.local_dim;
    let e = spec.coupling_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.cost_seed);

    let mut agents = Vec::with_capacity(spec.agents);
    for _ in 0..spec.agents {
        let m = normal_matrix(&mut rng, q, q);
        let r_mat = m.transpose() * &m + DMatrix::identity(q, q);
        let r_vec = DVector::from_iterator(q, (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let b = match spec.coupling_matrices {
            MatrixKind::Identity => DMatrix::identity(e, q),
            MatrixKind::Gaussian => normal_matrix(&mut rng, e, q),
        };
        agents.push(AgentSpec::quadratic(r_mat, r_vec, b)?);
    }
    let mut draw_b = || DVector::from_iterator(e, (0..e).map(|_| rng.sample::<f64, _>(Open01)));
    let g = match spec.coupling {
        CouplingSpec::UpperBound => CouplingFunction::UpperBoundIndicator { b: draw_b() },
        CouplingSpec::Equality => CouplingFunction::EqualityIndicator { b: draw_b() },
        CouplingSpec::Zero => CouplingFunction::Zero { dim: e },
        CouplingSpec::L1 { lambda } => CouplingFunction::L1Norm { lambda, dim: e },
    };
    let problem = SharingProblem::new(agents, g)?;
    let topology = Topology::erdos_renyi(spec.agents, spec.edge_probability, spec.graph_seed)?;
    Ok((problem, topology))
}

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::graph::CombinationSet;
use crate::linalg::kron_apply;
use crate::problem::SharingProblem;
use crate::serde_util;

use super::config::{Mode, SolverConfig};
use super::state::{AgentState, NetworkState};

/// Tolerance on the optimality residuals of the supplied primal-dual pair.
pub const KKT_TOL: f64 = 1e-8;
/// Tolerance on the four fixed-point residuals.
pub const FIXED_POINT_TOL: f64 = 1e-9;

/// A fixed point `(w°, x°, y°, z°)` of the decentralized iteration built from
/// a centralized optimal pair `(w★, y★)`.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPoint {
    #[serde(serialize_with = "serde_util::dvec::serialize")]
    pub w: DVector<f64>,
    #[serde(serialize_with = "serde_util::dvec_blocks::serialize")]
    pub y: Vec<DVector<f64>>,
    #[serde(serialize_with = "serde_util::dvec_blocks::serialize")]
    pub z: Vec<DVector<f64>>,
    /// In the range of `L`.
    #[serde(serialize_with = "serde_util::dvec_blocks::serialize")]
    pub x: Vec<DVector<f64>>,
    #[serde(serialize_with = "serde_util::dvec::serialize")]
    pub y_star: DVector<f64>,
    /// Max-abs residuals of the stationarity, z-definition, consensus and
    /// prox conditions, in that order.
    pub residuals: [f64; 4],
}

impl FixedPoint {
    pub fn w_blocks(&self, problem: &SharingProblem) -> Vec<DVector<f64>> {
        problem
            .split_primal(&self.w)
            .expect("fixed point built for this problem")
    }

    /// The network state that sits at this fixed point. `ψ = y° + μ_y B_k w°`
    /// and `φ = z°`, which keeps `φ − ψ = L x°` as the recursion requires.
    pub fn network_state(
        &self,
        problem: &SharingProblem,
        config: &SolverConfig,
        mode: Mode,
    ) -> NetworkState {
        let agents = problem
            .agents()
            .iter()
            .zip(self.w_blocks(problem))
            .zip(self.y.iter().zip(&self.z))
            .map(|((spec, w), (y, z))| AgentState {
                psi: y + &spec.b * &w * config.mu_y,
                phi: z.clone(),
                z: z.clone(),
                y: y.clone(),
                w,
            })
            .collect();
        NetworkState {
            agents,
            x: (mode == Mode::GeneralForm).then(|| self.x.clone()),
            iter: 0,
        }
    }
}

/// Max-abs violation of the two centralized optimality conditions:
/// `∇J(w) + Bᵀy = 0` and `y = prox_{g*}(y + Bw)`.
pub fn kkt_residual(problem: &SharingProblem, w: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    check_dim("centralized dual", problem.coupling_dim(), y.len())?;
    let mut stat = problem.grad_j(w)?;
    let mut offset = 0;
    for spec in problem.agents() {
        let mut block = stat.rows_mut(offset, spec.dim());
        block += spec.b.transpose() * y;
        offset += spec.dim();
    }
    let bw = problem.apply_b(w)?;
    let prox = problem.coupling().prox_conjugate(1.0, &(y + bw))?;
    Ok(stat.amax().max((prox - y).amax()))
}

/// The four fixed-point residuals of a candidate tuple.
pub fn fixed_point_residuals(
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    w: &DVector<f64>,
    y: &[DVector<f64>],
    z: &[DVector<f64>],
    x: &[DVector<f64>],
) -> Result<[f64; 4]> {
    let k = problem.num_agents();
    check_dim("fixed point y blocks", k, y.len())?;
    check_dim("fixed point z blocks", k, z.len())?;
    check_dim("fixed point x blocks", k, x.len())?;
    let owned_l;
    let l = match cs.l() {
        Some(l) => l,
        None => {
            owned_l = cs.materialize_l();
            &owned_l
        }
    };
    let w_blocks = problem.split_primal(w)?;
    let lx = kron_apply(l, x);
    let lz = kron_apply(l, z);
    let az = kron_apply(cs.abar(), z);
    let tau = config.mu_y / k as f64;

    let mut r = [0.0_f64; 4];
    for (i, spec) in problem.agents().iter().enumerate() {
        let stat = spec.cost.gradient(&w_blocks[i]) + spec.b.transpose() * &y[i];
        r[0] = r[0].max(stat.amax());
        let zdef = &z[i] - &y[i] - &spec.b * &w_blocks[i] * config.mu_y - &lx[i];
        r[1] = r[1].max(zdef.amax());
        r[2] = r[2].max(lz[i].amax());
        let prox = problem.coupling().prox_conjugate(tau, &az[i])?;
        r[3] = r[3].max((&y[i] - prox).amax());
    }
    Ok(r)
}

/// Builds `w° = w★`, `y° = 𝟙 ⊗ y★`, `z° = 𝟙 ⊗ (y★ + (μ_y/K) B w★)` and the
/// minimum-norm `x°` with `L x° = z° − y° − μ_y B_d w°`, then verifies the
/// fixed-point residuals.
pub fn build_fixed_point(
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    w_star: &DVector<f64>,
    y_star: &DVector<f64>,
) -> Result<FixedPoint> {
    let k = problem.num_agents();
    check_dim("combination matrix size", k, cs.num_agents())?;
    let kkt = kkt_residual(problem, w_star, y_star)?;
    if !(kkt <= KKT_TOL) {
        return Err(Error::KktResidual {
            residual: kkt,
            tol: KKT_TOL,
        });
    }

    let bw = problem.apply_b(w_star)?;
    let z_o = y_star + bw * (config.mu_y / k as f64);
    let y = vec![y_star.clone(); k];
    let z = vec![z_o; k];
    let w_blocks = problem.split_primal(w_star)?;
    let rhs: Vec<DVector<f64>> = problem
        .agents()
        .iter()
        .zip(&w_blocks)
        .zip(y.iter().zip(&z))
        .map(|((spec, w), (yk, zk))| zk - yk - &spec.b * w * config.mu_y)
        .collect();
    let x = kron_apply(&cs.l_pseudo_inverse(), &rhs);

    let residuals = fixed_point_residuals(problem, cs, config, w_star, &y, &z, &x)?;
    if residuals.iter().any(|r| !(*r <= FIXED_POINT_TOL)) {
        return Err(Error::FixedPointResidual {
            residuals,
            tol: FIXED_POINT_TOL,
        });
    }
    Ok(FixedPoint {
        w: w_star.clone(),
        y,
        z,
        x,
        y_star: y_star.clone(),
        residuals,
    })
}

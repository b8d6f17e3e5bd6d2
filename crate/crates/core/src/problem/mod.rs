//! Sharing problem data: `min Σ_k J_k(w_k) + g(Σ_k B_k w_k)`.
//!
//! Each agent owns a smooth cost and a private coupling matrix `B_k`
//! (E × Q_k). The coupling function `g` is shared and only accessed through
//! proximal maps of `g` and its conjugate.

mod cost;
mod coupling;
mod io;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use cost::{Moduli, OracleCost, QuadraticCost, SmoothCost};
pub use coupling::{CouplingFunction, ProxOperator};
pub use io::{AgentFile, CouplingFile, ProblemFile};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{unstack, SymmetricEigen};

/// Scale-invariant rank tolerance: `λ_min(BBᵀ) > RANK_TOL · λ_max(BBᵀ)`.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub cost: Arc<dyn SmoothCost>,
    pub b: DMatrix<f64>,
}

impl AgentSpec {
    pub fn new(cost: Arc<dyn SmoothCost>, b: DMatrix<f64>) -> Result<Self> {
        check_dim("coupling matrix columns", cost.dim(), b.ncols())?;
        Ok(Self { cost, b })
    }

    pub fn quadratic(r_mat: DMatrix<f64>, r_vec: DVector<f64>, b: DMatrix<f64>) -> Result<Self> {
        Self::new(Arc::new(QuadraticCost::new(r_mat, r_vec)?), b)
    }

    pub fn dim(&self) -> usize {
        self.cost.dim()
    }

    /// Extreme eigenvalues of `B_k B_kᵀ`.
    pub fn gram_spectrum(&self) -> Result<(f64, f64)> {
        let eig = SymmetricEigen::new(&(&self.b * self.b.transpose()))?;
        Ok((eig.min(), eig.max()))
    }

    pub fn has_full_row_rank(&self) -> Result<bool> {
        if self.b.nrows() > self.b.ncols() {
            return Ok(false);
        }
        let (lo, hi) = self.gram_spectrum()?;
        Ok(hi > 0.0 && lo > RANK_TOL * hi)
    }
}

#[derive(Debug, Clone)]
pub struct SharingProblem {
    agents: Vec<AgentSpec>,
    g: CouplingFunction,
}

/// Outcome of the operational relative-interior check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InteriorCheck {
    pub ok: bool,
    /// Which candidate point passed, if any.
    pub witness: Option<String>,
    /// Smallest slack `b − Bw` (upper bound) or largest `|Bw − b|`
    /// (equality) at the best candidate.
    pub margin: f64,
}

impl SharingProblem {
    pub fn new(agents: Vec<AgentSpec>, g: CouplingFunction) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidInput(
                "problem needs at least one agent".into(),
            ));
        }
        let e = g.dim();
        for a in &agents {
            check_dim("coupling matrix rows", e, a.b.nrows())?;
        }
        Ok(Self { agents, g })
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn coupling(&self) -> &CouplingFunction {
        &self.g
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    /// Coupling dimension E.
    pub fn coupling_dim(&self) -> usize {
        self.g.dim()
    }

    /// Total primal dimension Q = Σ Q_k.
    pub fn primal_dim(&self) -> usize {
        self.agents.iter().map(AgentSpec::dim).sum()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.agents.iter().map(AgentSpec::dim).collect()
    }

    pub fn split_primal(&self, w: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        check_dim("stacked primal vector", self.primal_dim(), w.len())?;
        Ok(unstack(w, &self.block_sizes()))
    }

    /// `B = [B_1 ⋯ B_K]`.
    pub fn stacked_b(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.coupling_dim(), self.primal_dim());
        let mut col = 0;
        for a in &self.agents {
            out.columns_mut(col, a.dim()).copy_from(&a.b);
            col += a.dim();
        }
        out
    }

    /// `Bw = Σ_k B_k w_k`.
    pub fn apply_b(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let blocks = self.split_primal(w)?;
        let mut out = DVector::zeros(self.coupling_dim());
        for (a, wk) in self.agents.iter().zip(&blocks) {
            out += &a.b * wk;
        }
        Ok(out)
    }

    /// `J(w) = Σ_k J_k(w_k)`.
    pub fn objective(&self, w: &DVector<f64>) -> Result<f64> {
        let blocks = self.split_primal(w)?;
        Ok(self
            .agents
            .iter()
            .zip(&blocks)
            .map(|(a, wk)| a.cost.value(wk))
            .sum())
    }

    /// Stacked gradient of `J`; block k is `∇J_k(w_k)`.
    pub fn grad_j(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let blocks = self.split_primal(w)?;
        let mut out = DVector::zeros(self.primal_dim());
        let mut offset = 0;
        for (a, wk) in self.agents.iter().zip(&blocks) {
            out.rows_mut(offset, a.dim())
                .copy_from(&a.cost.gradient(wk));
            offset += a.dim();
        }
        Ok(out)
    }

    /// `ν = min_k ν_k`, `δ = max_k δ_k` (the Hessian of `J` is block diagonal).
    pub fn aggregate_moduli(&self) -> Result<Moduli> {
        let nu = self
            .agents
            .iter()
            .map(|a| a.cost.moduli().nu)
            .fold(f64::INFINITY, f64::min);
        let delta = self
            .agents
            .iter()
            .map(|a| a.cost.moduli().delta)
            .fold(0.0, f64::max);
        if !(nu > 0.0) {
            return Err(Error::NotStronglyConvex { nu });
        }
        Ok(Moduli { nu, delta })
    }

    /// `max_k σ_max(B_k)`, i.e. `σ_max(B_d)`.
    pub fn sigma_max_bd(&self) -> Result<f64> {
        let mut best = 0.0_f64;
        for a in &self.agents {
            best = best.max(a.gram_spectrum()?.1.max(0.0).sqrt());
        }
        Ok(best)
    }

    /// `min_k λ_min(B_k B_kᵀ)`, i.e. `λ_min(B_d B_dᵀ)`.
    pub fn lambda_min_bdbdt(&self) -> Result<f64> {
        let mut best = f64::INFINITY;
        for a in &self.agents {
            best = best.min(a.gram_spectrum()?.0);
        }
        Ok(best)
    }

    /// Indices of agents whose `B_k` is not numerically full row rank.
    pub fn rank_deficient_agents(&self) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (k, a) in self.agents.iter().enumerate() {
            if !a.has_full_row_rank()? {
                out.push(k);
            }
        }
        Ok(out)
    }

    /// `-R⁻¹r` when every cost is quadratic.
    pub fn unconstrained_minimizer(&self) -> Option<DVector<f64>> {
        let mut parts = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            let q = a.cost.as_quadratic()?;
            let chol = q.hessian().clone().cholesky()?;
            parts.push(-chol.solve(q.linear()));
        }
        Some(crate::linalg::stack(&parts))
    }

    /// Checks that some `Bw` lies in the relative interior of `dom g`.
    ///
    /// Finite-valued `g` passes trivially. For the indicator kinds the
    /// candidates are the supplied point, the unconstrained minimizer, and a
    /// least-norm solution of `Bw = b` (equality) or `Bw = b − 𝟙`
    /// (upper bound).
    pub fn check_relative_interior(&self, point: Option<&DVector<f64>>) -> Result<InteriorCheck> {
        let (b, equality) = match &self.g {
            CouplingFunction::EqualityIndicator { b } => (b, true),
            CouplingFunction::UpperBoundIndicator { b } => (b, false),
            g if g.is_finite_valued() => {
                return Ok(InteriorCheck {
                    ok: true,
                    witness: Some("finite-valued".into()),
                    margin: f64::INFINITY,
                })
            }
            _ => {
                let witness = point.map(|_| "supplied point (unverified)".to_string());
                return Ok(InteriorCheck {
                    ok: point.is_some(),
                    witness,
                    margin: f64::NAN,
                });
            }
        };

        let mut candidates: Vec<(String, DVector<f64>)> = Vec::new();
        if let Some(p) = point {
            check_dim("relative-interior point", self.primal_dim(), p.len())?;
            candidates.push(("supplied point".into(), p.clone()));
        }
        if let Some(w) = self.unconstrained_minimizer() {
            candidates.push(("unconstrained minimizer".into(), w));
        }
        let target = if equality {
            b.clone()
        } else {
            b.map(|x| x - 1.0)
        };
        if let Some(w) = least_norm_solution(&self.stacked_b(), &target) {
            candidates.push(("least-norm solution".into(), w));
        }

        let scale = 1e-9 * (1.0 + b.amax());
        let mut best: Option<(String, f64)> = None;
        for (name, w) in candidates {
            let bw = self.apply_b(&w)?;
            let (ok, margin) = if equality {
                let dev = (&bw - b).amax();
                (dev <= scale, dev)
            } else {
                let slack = (b - &bw).min();
                (slack > 0.0, slack)
            };
            if ok {
                return Ok(InteriorCheck {
                    ok: true,
                    witness: Some(name),
                    margin,
                });
            }
            let better = match &best {
                None => true,
                Some((_, m)) => {
                    if equality {
                        margin < *m
                    } else {
                        margin > *m
                    }
                }
            };
            if better {
                best = Some((name, margin));
            }
        }
        Ok(InteriorCheck {
            ok: false,
            witness: None,
            margin: best.map_or(f64::NAN, |(_, m)| m),
        })
    }
}

/// `Bᵀ(BBᵀ)⁻¹ t`, or `None` when `BBᵀ` is singular.
fn least_norm_solution(b: &DMatrix<f64>, t: &DVector<f64>) -> Option<DVector<f64>> {
    let gram = b * b.transpose();
    let chol = gram.cholesky()?;
    let sol = b.transpose() * chol.solve(t);
    let resid = (b * &sol - t).amax();
    (resid <= 1e-8 * (1.0 + t.amax())).then_some(sol)
}

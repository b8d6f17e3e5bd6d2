//! Step-size bounds and the linear-rate certificate.

use serde::Serialize;

use crate::error::Result;
use crate::graph::CombinationSet;
use crate::problem::{Moduli, SharingProblem};

use super::config::SolverConfig;
use super::fixed_point::FixedPoint;
use super::lyapunov::lyapunov_value;
use super::state::NetworkState;

/// Factor applied to the open bound on `μ_y` when steps are auto-selected.
pub const MU_Y_SAFETY: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSizeBounds {
    /// `μ_w ≤ 2/(δ+ν)`.
    pub mu_w_max: f64,
    /// `μ_y < 2δν / ((δ+ν) σ²_max(B_d))`, strict.
    pub mu_y_sup: f64,
}

impl StepSizeBounds {
    pub fn from_parts(moduli: Moduli, sigma_max_bd: f64) -> Self {
        let Moduli { nu, delta } = moduli;
        Self {
            mu_w_max: 2.0 / (delta + nu),
            mu_y_sup: 2.0 * delta * nu / ((delta + nu) * sigma_max_bd * sigma_max_bd),
        }
    }

    /// `(μ_w, μ_y)` at the largest admissible primal step and the safety
    /// factor times the dual bound.
    pub fn auto(&self) -> (f64, f64) {
        (self.mu_w_max, MU_Y_SAFETY * self.mu_y_sup)
    }

    pub fn admits(&self, mu_w: f64, mu_y: f64) -> bool {
        mu_w > 0.0 && mu_y > 0.0 && mu_w <= self.mu_w_max && mu_y < self.mu_y_sup
    }
}

pub fn step_size_bounds(problem: &SharingProblem) -> Result<StepSizeBounds> {
    let moduli = problem.aggregate_moduli()?;
    Ok(StepSizeBounds::from_parts(moduli, problem.sigma_max_bd()?))
}

/// The three contraction factors.
pub fn gamma_terms(
    moduli: Moduli,
    mu_w: f64,
    mu_y: f64,
    sigma_max_bd: f64,
    lambda_min_bdbdt: f64,
    sigma_min_l: Option<f64>,
) -> (f64, f64, f64) {
    let Moduli { nu, delta } = moduli;
    let denom = 1.0 - mu_y * mu_w * sigma_max_bd * sigma_max_bd;
    let gamma1 = if denom > 0.0 {
        (1.0 - 2.0 * mu_w * delta * nu / (delta + nu)) / denom
    } else {
        f64::INFINITY
    };
    let gamma2 = 1.0 - mu_w * mu_y * lambda_min_bdbdt;
    // With one agent the x-error is identically zero and imposes no rate.
    let gamma3 = sigma_min_l.map_or(0.0, |s| 1.0 - s * s);
    (gamma1, gamma2, gamma3)
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub nu: f64,
    pub delta: f64,
    pub mu_w: f64,
    pub mu_y: f64,
    pub mu_w_max: f64,
    pub mu_y_sup: f64,
    pub sigma_max_bd: f64,
    pub lambda_min_bdbdt: f64,
    pub sigma_min_l: Option<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma: f64,
    /// Present when a fixed point and the initial state were supplied.
    pub c_o: Option<f64>,
    pub certified: bool,
    pub reasons: Vec<String>,
}

impl RateReport {
    /// `γⁱ C_o`.
    pub fn bound(&self, i: usize) -> Option<f64> {
        self.c_o.map(|c| self.gamma.powi(i as i32) * c)
    }
}

/// Evaluates every hypothesis of the linear-rate bound and the resulting
/// `γ`. Failing hypotheses are listed in `reasons` and leave
/// `certified = false`. With `anchor = (fixed point, initial state)` the
/// constant `C_o` is computed too.
pub fn rate_report(
    problem: &SharingProblem,
    cs: &CombinationSet,
    config: &SolverConfig,
    anchor: Option<(&FixedPoint, &NetworkState)>,
) -> Result<RateReport> {
    let mut reasons = Vec::new();
    let nu = problem
        .agents()
        .iter()
        .map(|a| a.cost.moduli().nu)
        .fold(f64::INFINITY, f64::min);
    let delta = problem
        .agents()
        .iter()
        .map(|a| a.cost.moduli().delta)
        .fold(0.0, f64::max);
    if !(nu > 0.0) {
        reasons.push(format!("J is not strongly convex: nu = {nu}"));
    }
    if !(nu <= delta) {
        reasons.push(format!(
            "moduli violate 0 < nu <= delta: nu = {nu}, delta = {delta}"
        ));
    }
    let moduli = Moduli { nu, delta };

    let sigma_max_bd = problem.sigma_max_bd()?;
    let lambda_min_bdbdt = problem.lambda_min_bdbdt()?;
    let deficient = problem.rank_deficient_agents()?;
    if !deficient.is_empty() {
        reasons.push(format!("B_k lacks full row rank for agents {deficient:?}"));
    }

    let a2 = cs.check_combination();
    if !a2.ok {
        reasons.push(format!(
            "combination matrices violate I - L^2 > 0 or Abar^2 <= I - L^2: min eig(I - L^2) = {:e}, min eig(I - L^2 - Abar^2) = {:e}",
            a2.min_eig_i_minus_l2, a2.min_eig_gap
        ));
    }
    let interior = problem.check_relative_interior(None)?;
    if !interior.ok {
        reasons.push("no B w found in the relative interior of dom g".into());
    }

    let bounds = StepSizeBounds::from_parts(moduli, sigma_max_bd);
    if !(config.mu_w > 0.0 && config.mu_y > 0.0) {
        reasons.push("step sizes must be strictly positive".into());
    }
    if !(config.mu_w <= bounds.mu_w_max) {
        reasons.push(format!(
            "mu_w <= 2/(delta+nu) violated: mu_w = {} > {}",
            config.mu_w, bounds.mu_w_max
        ));
    }
    if !(config.mu_y < bounds.mu_y_sup) {
        reasons.push(format!(
            "mu_y < 2 delta nu/((delta+nu) sigma_max^2(B_d)) violated: mu_y = {} >= {}",
            config.mu_y, bounds.mu_y_sup
        ));
    }

    let sigma_min_l = cs.sigma_min_l();
    let (gamma1, gamma2, gamma3) = gamma_terms(
        moduli,
        config.mu_w,
        config.mu_y,
        sigma_max_bd,
        lambda_min_bdbdt,
        sigma_min_l,
    );
    let gamma = gamma1.max(gamma2).max(gamma3);
    if reasons.is_empty() && !(gamma < 1.0) {
        reasons.push(format!("gamma = {gamma} is not below one"));
    }

    let c_o = match anchor {
        Some((fp, init)) => {
            let v = lyapunov_value(init, fp, problem, cs, config)?;
            let denom = 1.0 - config.mu_y * config.mu_w * sigma_max_bd * sigma_max_bd;
            (denom > 0.0).then(|| v / denom)
        }
        None => None,
    };

    Ok(RateReport {
        nu,
        delta,
        mu_w: config.mu_w,
        mu_y: config.mu_y,
        mu_w_max: bounds.mu_w_max,
        mu_y_sup: bounds.mu_y_sup,
        sigma_max_bd,
        lambda_min_bdbdt,
        sigma_min_l,
        gamma1,
        gamma2,
        gamma3,
        gamma,
        c_o,
        certified: reasons.is_empty(),
        reasons,
    })
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Decentralized recursion with one neighbor exchange per round.
    #[default]
    Ped2,
    /// The primal-dual iteration with the auxiliary `x` kept explicitly.
    GeneralForm,
    /// Centralized linearized prox-ascent baseline.
    Centralized,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Ped2 => "ped2",
            Mode::GeneralForm => "general",
            Mode::Centralized => "central",
        }
    }
}

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_STOP_TOL: f64 = 1e-12;
/// State norms above this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mu_w: f64,
    pub mu_y: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop once `‖w_i − w_{i−1}‖_∞ ≤ stop_tol`.
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_stop_tol() -> f64 {
    DEFAULT_STOP_TOL
}

impl SolverConfig {
    pub fn new(mu_w: f64, mu_y: f64) -> Result<Self> {
        let cfg = Self {
            mu_w,
            mu_y,
            max_iter: DEFAULT_MAX_ITER,
            stop_tol: DEFAULT_STOP_TOL,
            seed: 0,
            mode: Mode::Ped2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.mu_w) || !ok(self.mu_y) {
            return Err(Error::InvalidInput(format!(
                "step sizes must be positive and finite, got mu_w = {}, mu_y = {}",
                self.mu_w, self.mu_y
            )));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::InvalidInput("stop_tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// Dual weight `c_y = μ_w / μ_y` of the Lyapunov function.
    pub fn c_y(&self) -> f64 {
        self.mu_w / self.mu_y
    }
}

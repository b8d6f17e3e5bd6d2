use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// A user-supplied coupling function, described only through its proximal map.
pub trait ProxOperator: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// `prox_{τg}(v)`.
    fn prox(&self, tau: f64, v: &DVector<f64>) -> DVector<f64>;

    /// Whether `g` is finite everywhere (then any `Bw` lies in the relative
    /// interior of its domain).
    fn is_finite_valued(&self) -> bool {
        false
    }
}

/// The shared non-smooth term `g` applied to `Σ_k B_k w_k`.
#[derive(Debug, Clone)]
pub enum CouplingFunction {
    /// `g ≡ 0`.
    Zero {
        dim: usize,
    },
    /// Indicator of `{x = b}`.
    EqualityIndicator {
        b: DVector<f64>,
    },
    /// Indicator of `{x ≤ b}` (componentwise).
    UpperBoundIndicator {
        b: DVector<f64>,
    },
    /// `λ‖x‖₁`.
    L1Norm {
        lambda: f64,
        dim: usize,
    },
    Custom(Arc<dyn ProxOperator>),
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "prox step must be positive, got {tau}"
        )))
    }
}

impl CouplingFunction {
    pub fn dim(&self) -> usize {
        match self {
            Self::Zero { dim } | Self::L1Norm { dim, .. } => *dim,
            Self::EqualityIndicator { b } | Self::UpperBoundIndicator { b } => b.len(),
            Self::Custom(op) => op.dim(),
        }
    }

    pub fn is_finite_valued(&self) -> bool {
        match self {
            Self::Zero { .. } | Self::L1Norm { .. } => true,
            Self::EqualityIndicator { .. } | Self::UpperBoundIndicator { .. } => false,
            Self::Custom(op) => op.is_finite_valued(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero { .. } => "zero",
            Self::EqualityIndicator { .. } => "equality",
            Self::UpperBoundIndicator { .. } => "upper_bound",
            Self::L1Norm { .. } => "l1",
            Self::Custom(_) => "custom",
        }
    }

    /// `prox_{τg}(v) = argmin_u g(u) + ‖v − u‖²/(2τ)`.
    pub fn prox(&self, tau: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_tau(tau)?;
        check_dim("prox argument", self.dim(), v.len())?;
        Ok(self.prox_unchecked(tau, v))
    }

    fn prox_unchecked(&self, tau: f64, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Zero { .. } => v.clone(),
            Self::EqualityIndicator { b } => b.clone(),
            Self::UpperBoundIndicator { b } => v.zip_map(b, f64::min),
            Self::L1Norm { lambda, .. } => {
                let t = tau * lambda;
                v.map(|x| x.signum() * (x.abs() - t).max(0.0))
            }
            Self::Custom(op) => op.prox(tau, v),
        }
    }

    /// `prox_{τg*}(v)`, closed form for the built-in kinds and Moreau
    /// decomposition for custom ones.
    pub fn prox_conjugate(&self, tau: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_tau(tau)?;
        check_dim("conjugate prox argument", self.dim(), v.len())?;
        Ok(self.prox_conjugate_unchecked(tau, v))
    }

    pub(crate) fn prox_conjugate_unchecked(&self, tau: f64, v: &DVector<f64>) -> DVector<f64> {
        match self {
            // g* = ι_{0}
            Self::Zero { dim } => DVector::zeros(*dim),
            // g*(y) = bᵀy
            Self::EqualityIndicator { b } => v - b * tau,
            // g*(y) = bᵀy + ι_{y ≥ 0}
            Self::UpperBoundIndicator { b } => v.zip_map(b, |vi, bi| (vi - tau * bi).max(0.0)),
            // g* = ι_{‖y‖∞ ≤ λ}
            Self::L1Norm { lambda, .. } => v.map(|x| x.clamp(-lambda, *lambda)),
            Self::Custom(_) => self.moreau_conjugate(tau, v),
        }
    }

    /// `prox_{τg*}(v) = v − τ prox_{g/τ}(v/τ)`, valid for every kind.
    pub fn prox_conjugate_moreau(&self, tau: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_tau(tau)?;
        check_dim("conjugate prox argument", self.dim(), v.len())?;
        Ok(self.moreau_conjugate(tau, v))
    }

    fn moreau_conjugate(&self, tau: f64, v: &DVector<f64>) -> DVector<f64> {
        v - self.prox_unchecked(1.0 / tau, &(v / tau)) * tau
    }
}

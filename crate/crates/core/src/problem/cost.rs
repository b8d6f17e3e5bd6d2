use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{max_abs, SymmetricEigen};

/// Strong-convexity modulus `nu` and smoothness modulus `delta`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Moduli {
    pub nu: f64,
    pub delta: f64,
}

/// A differentiable local cost `J_k` together with its curvature moduli.
pub trait SmoothCost: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, w: &DVector<f64>) -> f64;
    fn gradient(&self, w: &DVector<f64>) -> DVector<f64>;
    fn moduli(&self) -> Moduli;

    fn as_quadratic(&self) -> Option<&QuadraticCost> {
        None
    }
}

/// `½ wᵀ R w + rᵀ w` with `R` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct QuadraticCost {
    r_mat: DMatrix<f64>,
    r_vec: DVector<f64>,
    moduli: Moduli,
}

impl QuadraticCost {
    pub fn new(r_mat: DMatrix<f64>, r_vec: DVector<f64>) -> Result<Self> {
        let n = r_mat.nrows();
        if r_mat.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "R must be square, got {}x{}",
                n,
                r_mat.ncols()
            )));
        }
        check_dim("quadratic linear term", n, r_vec.len())?;
        let asym = max_abs(&(&r_mat - r_mat.transpose()));
        if asym > 1e-12 * max_abs(&r_mat) {
            return Err(Error::InvalidInput(format!(
                "R is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let eig = SymmetricEigen::new(&r_mat)?;
        if eig.min() <= 0.0 {
            return Err(Error::NotStronglyConvex { nu: eig.min() });
        }
        let moduli = Moduli {
            nu: eig.min(),
            delta: eig.max(),
        };
        Ok(Self {
            r_mat,
            r_vec,
            moduli,
        })
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.r_mat
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.r_vec
    }
}

impl SmoothCost for QuadraticCost {
    fn dim(&self) -> usize {
        self.r_vec.len()
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.r_mat * w)) + self.r_vec.dot(w)
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.r_mat * w + &self.r_vec
    }

    fn moduli(&self) -> Moduli {
        self.moduli
    }

    fn as_quadratic(&self) -> Option<&QuadraticCost> {
        Some(self)
    }
}

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// A cost given by value/gradient closures. The moduli are asserted by the
/// caller and only spot-checked, see [`OracleCost::spot_check`].
#[derive(Clone)]
pub struct OracleCost {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
    moduli: Moduli,
}

impl OracleCost {
    pub fn new(
        dim: usize,
        moduli: Moduli,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(moduli.nu >= 0.0 && moduli.nu <= moduli.delta && moduli.delta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "moduli must satisfy 0 <= nu <= delta, got {moduli:?}"
            )));
        }
        Ok(Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            moduli,
        })
    }

    /// Checks the monotonicity bounds `ν‖d‖² ≤ dᵀ(∇J(a) − ∇J(b)) ≤ δ‖d‖²`
    /// on the given pairs. Returns the first violating pair index.
    pub fn spot_check(&self, pairs: &[(DVector<f64>, DVector<f64>)]) -> Option<usize> {
        pairs.iter().position(|(a, b)| {
            let d = a - b;
            let g = self.gradient(a) - self.gradient(b);
            let inner = d.dot(&g);
            let sq = d.norm_squared();
            let slack = 1e-9 * (1.0 + sq);
            inner < self.moduli.nu * sq - slack || inner > self.moduli.delta * sq + slack
        })
    }
}

impl fmt::Debug for OracleCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleCost")
            .field("dim", &self.dim)
            .field("moduli", &self.moduli)
            .finish_non_exhaustive()
    }
}

impl SmoothCost for OracleCost {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        (self.value)(w)
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(w)
    }

    fn moduli(&self) -> Moduli {
        self.moduli
    }
}

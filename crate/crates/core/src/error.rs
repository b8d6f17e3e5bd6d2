use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cost is not strongly convex (nu = {nu})")]
    NotStronglyConvex { nu: f64 },

    #[error("topology is disconnected")]
    Disconnected,

    #[error("combination matrix rejected: {0}")]
    BadCombinationMatrix(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNotConverged { sweeps: usize, off_norm: f64 },

    #[error("iteration diverged at round {iter} (state norm {norm:e})")]
    Divergence { iter: usize, norm: f64 },

    #[error("missing operator: {0}")]
    MissingOperator(&'static str),

    #[error("optimality residual {residual:e} exceeds tolerance {tol:e}")]
    KktResidual { residual: f64, tol: f64 },

    #[error("fixed-point residuals {residuals:?} exceed tolerance {tol:e}")]
    FixedPointResidual { residuals: [f64; 4], tol: f64 },

    #[error("oracle cannot handle this problem: {0}")]
    OracleUnsupported(String),

    #[error("no feasible stationary point found among active sets")]
    OracleInfeasible,

    #[error("rate fit needs at least {required} usable points, found {usable}")]
    TooFewPoints { usable: usize, required: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

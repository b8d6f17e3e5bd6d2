//! Exact solutions of small quadratic sharing problems by active-set
//! enumeration.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{CouplingFunction, SharingProblem};
use crate::serde_util;

/// Largest coupling dimension accepted for enumeration.
pub const MAX_ORACLE_DIM: usize = 16;
/// Primal feasibility and dual sign tolerance for accepting a subset.
pub const ORACLE_TOL: f64 = 1e-9;
/// Subsets whose reduced KKT matrix is this ill-conditioned count as singular.
const PIVOT_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub dual_feasibility: f64,
    pub complementary_slackness: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.dual_feasibility)
            .max(self.complementary_slackness)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSolution {
    #[serde(serialize_with = "serde_util::dvec::serialize")]
    pub w_star: DVector<f64>,
    #[serde(serialize_with = "serde_util::dvec::serialize")]
    pub y_star: DVector<f64>,
    pub active_set: Vec<usize>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub residuals: KktResiduals,
    pub accepted_subsets: usize,
    /// Spread of objective values across all accepted subsets.
    pub objective_spread: f64,
}

/// Block-diagonal `R⁻¹` applied through per-agent Cholesky factors.
struct ReducedSystem {
    /// `R⁻¹ r`
    rinv_r: DVector<f64>,
    /// `R⁻¹ Bᵀ`
    rinv_bt: DMatrix<f64>,
    b: DMatrix<f64>,
    /// `B R⁻¹ Bᵀ`
    h: DMatrix<f64>,
    /// `B R⁻¹ r`
    h_r: DVector<f64>,
}

impl ReducedSystem {
    fn new(problem: &SharingProblem) -> Result<Self> {
        let b = problem.stacked_b();
        let q = problem.primal_dim();
        let e = problem.coupling_dim();
        let mut rinv_r = DVector::zeros(q);
        let mut rinv_bt = DMatrix::zeros(q, e);
        let mut offset = 0;
        for spec in problem.agents() {
            let quad = spec.cost.as_quadratic().ok_or_else(|| {
                Error::OracleUnsupported("all local costs must be quadratic".into())
            })?;
            let chol = quad.hessian().clone().cholesky().ok_or_else(|| {
                Error::OracleUnsupported("local Hessian is not positive definite".into())
            })?;
            let n = spec.dim();
            rinv_r
                .rows_mut(offset, n)
                .copy_from(&chol.solve(quad.linear()));
            rinv_bt
                .rows_mut(offset, n)
                .copy_from(&chol.solve(&spec.b.transpose()));
            offset += n;
        }
        let h = &b * &rinv_bt;
        let h = (&h + h.transpose()) * 0.5;
        let h_r = &b * &rinv_r;
        Ok(Self {
            rinv_r,
            rinv_bt,
            b,
            h,
            h_r,
        })
    }

    /// Solves `[R B_Sᵀ; B_S 0](w, y_S) = (−r, b_S)` by eliminating `w`:
    /// `(B_S R⁻¹ B_Sᵀ) y_S = −(b_S + B_S R⁻¹ r)`, `w = −R⁻¹(r + B_Sᵀ y_S)`.
    /// Returns `None` when the reduced matrix is singular.
    fn solve(
        &self,
        subset: &[usize],
        rhs_b: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>)> {
        let e = self.b.nrows();
        let mut y = DVector::zeros(e);
        if !subset.is_empty() {
            let s = subset.len();
            let hs = DMatrix::from_fn(s, s, |i, j| self.h[(subset[i], subset[j])]);
            let rhs = DVector::from_fn(s, |i, _| -(rhs_b[subset[i]] + self.h_r[subset[i]]));
            let chol = hs.cholesky()?;
            let diag = chol.l_dirty().diagonal();
            let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &d| {
                (lo.min(d.abs()), hi.max(d.abs()))
            });
            if !(lo * lo > PIVOT_RATIO * hi * hi) {
                return None;
            }
            let ys = chol.solve(&rhs);
            for (i, &row) in subset.iter().enumerate() {
                y[row] = ys[i];
            }
        }
        let w = -(&self.rinv_r + &self.rinv_bt * &y);
        Some((w, y))
    }
}

fn residuals(
    problem: &SharingProblem,
    w: &DVector<f64>,
    y: &DVector<f64>,
    b: &DVector<f64>,
    inequality: bool,
) -> Result<KktResiduals> {
    let mut stat = problem.grad_j(w)?;
    stat += problem.stacked_b().transpose() * y;
    let slack = problem.apply_b(w)? - b;
    Ok(if inequality {
        KktResiduals {
            stationarity: stat.amax(),
            primal_feasibility: slack.max().max(0.0),
            dual_feasibility: (-y.min()).max(0.0),
            complementary_slackness: y.component_mul(&slack).amax(),
        }
    } else {
        KktResiduals {
            stationarity: stat.amax(),
            primal_feasibility: slack.amax(),
            dual_feasibility: 0.0,
            complementary_slackness: 0.0,
        }
    })
}

/// Ground-truth `(w★, y★)` for quadratic costs with a zero, equality, or
/// upper-bound coupling. Every subset of the constraint rows is tried as
/// the active set; the feasible stationary point with the lowest objective
/// wins, earlier subsets winning ties.
pub fn qp_oracle(problem: &SharingProblem) -> Result<OracleSolution> {
    let e = problem.coupling_dim();
    let (b, inequality) = match problem.coupling() {
        CouplingFunction::Zero { .. } => (None, false),
        CouplingFunction::EqualityIndicator { b } => (Some(b.clone()), false),
        CouplingFunction::UpperBoundIndicator { b } => (Some(b.clone()), true),
        other => {
            return Err(Error::OracleUnsupported(format!(
                "coupling kind '{}' is not an equality/upper-bound indicator",
                other.name()
            )))
        }
    };
    if b.is_some() && e > MAX_ORACLE_DIM {
        return Err(Error::OracleUnsupported(format!(
            "coupling dimension {e} exceeds the enumeration limit {MAX_ORACLE_DIM}"
        )));
    }
    let sys = ReducedSystem::new(problem)?;

    let Some(b) = b else {
        let (w, y) = sys
            .solve(&[], &DVector::zeros(e))
            .expect("unconstrained solve");
        let objective = problem.objective(&w)?;
        let res = residuals(
            problem,
            &w,
            &y,
            &DVector::from_element(e, f64::INFINITY),
            true,
        )?;
        let res = KktResiduals {
            primal_feasibility: 0.0,
            complementary_slackness: 0.0,
            ..res
        };
        return Ok(OracleSolution {
            w_star: w,
            y_star: y,
            active_set: vec![],
            objective,
            kkt_residual: res.max(),
            residuals: res,
            accepted_subsets: 1,
            objective_spread: 0.0,
        });
    };

    let subsets: Box<dyn Iterator<Item = u32>> = if inequality {
        Box::new(0..(1u32 << e))
    } else {
        Box::new(std::iter::once((1u32 << e) - 1))
    };

    // (objective, active set, w, y)
    type Candidate = (f64, Vec<usize>, DVector<f64>, DVector<f64>);
    let mut best: Option<Candidate> = None;
    let mut accepted = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for mask in subsets {
        let subset: Vec<usize> = (0..e).filter(|i| mask & (1 << i) != 0).collect();
        let Some((w, y)) = sys.solve(&subset, &b) else {
            continue;
        };
        let bw = &sys.b * &w;
        let feasible = if inequality {
            bw.iter().zip(b.iter()).all(|(l, r)| *l <= r + ORACLE_TOL)
                && subset.iter().all(|&i| y[i] >= -ORACLE_TOL)
        } else {
            (&bw - &b).amax() <= ORACLE_TOL
        };
        if !feasible {
            continue;
        }
        accepted += 1;
        let obj = problem.objective(&w)?;
        lo = lo.min(obj);
        hi = hi.max(obj);
        if best.as_ref().is_none_or(|(o, ..)| obj < *o) {
            best = Some((obj, subset, w, y));
        }
    }

    let (objective, active_set, w, y) = best.ok_or(Error::OracleInfeasible)?;
    let res = residuals(problem, &w, &y, &b, inequality)?;
    Ok(OracleSolution {
        w_star: w,
        y_star: y,
        active_set,
        objective,
        kkt_residual: res.max(),
        residuals: res,
        accepted_subsets: accepted,
        objective_spread: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::AgentSpec;

    fn dv(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn scalar_problem(r: f64, lin: f64, g: CouplingFunction) -> SharingProblem {
        SharingProblem::new(
            vec![AgentSpec::quadratic(
                DMatrix::from_element(1, 1, r),
                DVector::from_element(1, lin),
                DMatrix::from_element(1, 1, 1.0),
            )
            .unwrap()],
            g,
        )
        .unwrap()
    }

    #[test]
    fn feasible_unconstrained_optimum_has_empty_active_set() {
        let p = scalar_problem(
            2.0,
            1.0,
            CouplingFunction::UpperBoundIndicator { b: dv(&[5.0]) },
        );
        let sol = qp_oracle(&p).unwrap();
        assert!(sol.active_set.is_empty());
        assert_eq!(sol.y_star, dv(&[0.0]));
        assert!((sol.w_star[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_active_constraint() {
        // min ½w² s.t. w ≤ −1: w★ = −1, y★ = 1.
        let p = scalar_problem(
            1.0,
            0.0,
            CouplingFunction::UpperBoundIndicator { b: dv(&[-1.0]) },
        );
        let sol = qp_oracle(&p).unwrap();
        assert_eq!(sol.active_set, vec![0]);
        assert!((sol.w_star[0] + 1.0).abs() < 1e-15);
        assert!((sol.y_star[0] - 1.0).abs() < 1e-15);
        assert!(sol.kkt_residual < 1e-12);
    }

    #[test]
    fn equality_and_zero_kinds() {
        let p = scalar_problem(
            1.0,
            0.0,
            CouplingFunction::EqualityIndicator { b: dv(&[2.0]) },
        );
        let sol = qp_oracle(&p).unwrap();
        assert!((sol.w_star[0] - 2.0).abs() < 1e-15);
        assert!((sol.y_star[0] + 2.0).abs() < 1e-15);

        let p = scalar_problem(4.0, 2.0, CouplingFunction::Zero { dim: 1 });
        let sol = qp_oracle(&p).unwrap();
        assert!((sol.w_star[0] + 0.5).abs() < 1e-15);
        assert_eq!(sol.y_star[0], 0.0);
    }

    #[test]
    fn rejects_unsupported_inputs() {
        let p = scalar_problem(
            1.0,
            0.0,
            CouplingFunction::L1Norm {
                lambda: 1.0,
                dim: 1,
            },
        );
        assert!(matches!(qp_oracle(&p), Err(Error::OracleUnsupported(_))));

        let big = SharingProblem::new(
            vec![AgentSpec::quadratic(
                DMatrix::identity(17, 17),
                DVector::zeros(17),
                DMatrix::identity(17, 17),
            )
            .unwrap()],
            CouplingFunction::UpperBoundIndicator {
                b: DVector::zeros(17),
            },
        )
        .unwrap();
        assert!(matches!(qp_oracle(&big), Err(Error::OracleUnsupported(_))));
    }

    #[test]
    fn singular_subsets_are_skipped() {
        // Two identical rows: any subset containing both is singular.
        let p = SharingProblem::new(
            vec![AgentSpec::quadratic(
                DMatrix::identity(2, 2),
                dv(&[-3.0, 0.0]),
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]),
            )
            .unwrap()],
            CouplingFunction::UpperBoundIndicator { b: dv(&[1.0, 1.0]) },
        )
        .unwrap();
        let sol = qp_oracle(&p).unwrap();
        assert!((sol.w_star[0] - 1.0).abs() < 1e-12);
        assert!(sol.kkt_residual < 1e-9);
        assert!(sol.objective_spread < 1e-9);
    }
}

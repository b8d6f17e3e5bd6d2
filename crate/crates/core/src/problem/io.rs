//! JSON representation of problem instances. Matrices are row-major nested
//! arrays; the coupling function is a tagged variant such as
//! `{"kind": "upper_bound", "b": [...]}`.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{AgentSpec, CouplingFunction, SharingProblem};
use crate::error::{Error, Result};
use crate::linalg::{matrix_from_rows, matrix_to_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingFile {
    Zero { dim: usize },
    Equality { b: Vec<f64> },
    UpperBound { b: Vec<f64> },
    L1 { lambda: f64, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentFile {
    #[serde(rename = "R")]
    pub r_mat: Vec<Vec<f64>>,
    #[serde(rename = "r")]
    pub r_vec: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub agents: Vec<AgentFile>,
    pub g: CouplingFile,
}

impl CouplingFile {
    pub fn to_coupling(&self) -> Result<CouplingFunction> {
        Ok(match self {
            Self::Zero { dim } => CouplingFunction::Zero { dim: *dim },
            Self::Equality { b } => CouplingFunction::EqualityIndicator {
                b: DVector::from_column_slice(b),
            },
            Self::UpperBound { b } => CouplingFunction::UpperBoundIndicator {
                b: DVector::from_column_slice(b),
            },
            Self::L1 { lambda, dim } => {
                if !(*lambda >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "l1 weight must be nonnegative, got {lambda}"
                    )));
                }
                CouplingFunction::L1Norm {
                    lambda: *lambda,
                    dim: *dim,
                }
            }
        })
    }

    pub fn from_coupling(g: &CouplingFunction) -> Result<Self> {
        Ok(match g {
            CouplingFunction::Zero { dim } => Self::Zero { dim: *dim },
            CouplingFunction::EqualityIndicator { b } => Self::Equality {
                b: b.iter().copied().collect(),
            },
            CouplingFunction::UpperBoundIndicator { b } => Self::UpperBound {
                b: b.iter().copied().collect(),
            },
            CouplingFunction::L1Norm { lambda, dim } => Self::L1 {
                lambda: *lambda,
                dim: *dim,
            },
            CouplingFunction::Custom(_) => {
                return Err(Error::InvalidInput(
                    "custom coupling functions cannot be serialized".into(),
                ))
            }
        })
    }
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<SharingProblem> {
        let agents = self
            .agents
            .iter()
            .map(|a| {
                AgentSpec::quadratic(
                    matrix_from_rows(&a.r_mat)?,
                    DVector::from_column_slice(&a.r_vec),
                    matrix_from_rows(&a.b)?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        SharingProblem::new(agents, self.g.to_coupling()?)
    }

    /// Fails for problems with non-quadratic costs or a custom coupling.
    pub fn from_problem(p: &SharingProblem) -> Result<Self> {
        let agents = p
            .agents()
            .iter()
            .map(|a| {
                let q = a.cost.as_quadratic().ok_or_else(|| {
                    Error::InvalidInput("only quadratic costs can be serialized".into())
                })?;
                Ok(AgentFile {
                    r_mat: matrix_to_rows(q.hessian()),
                    r_vec: q.linear().iter().copied().collect(),
                    b: matrix_to_rows(&a.b),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            agents,
            g: CouplingFile::from_coupling(p.coupling())?,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

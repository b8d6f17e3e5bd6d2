//! Decentralized sharing optimization by proximal exact dual diffusion.
//!
//! Agents minimize `Σ_k J_k(w_k) + g(Σ_k B_k w_k)` over a network. Each
//! agent keeps its cost, coupling matrix and primal block private and
//! exchanges only dual-sized vectors with its neighbors.
//!
//! ```
//! use ped2_core::{solve, CombinationSet, CouplingFunction, AgentSpec, SharingProblem,
//!     SolverConfig, Topology, DMatrix, DVector};
//!
//! let agents = (0..3)
//!     .map(|k| {
//!         AgentSpec::quadratic(
//!             DMatrix::identity(2, 2),
//!             DVector::from_element(2, k as f64),
//!             DMatrix::identity(2, 2),
//!         )
//!     })
//!     .collect::<Result<Vec<_>, _>>()
//!     .unwrap();
//! let problem = SharingProblem::new(agents, CouplingFunction::Zero { dim: 2 }).unwrap();
//! let cs = CombinationSet::from_topology(&Topology::path(3).unwrap()).unwrap();
//! let config = SolverConfig::new(0.5, 0.5).unwrap().with_max_iter(2000);
//! let run = solve(&problem, &cs, &config, None).unwrap();
//! assert!(run.converged);
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod problem;
mod serde_util;
pub mod solvers;
pub mod validation;

pub use nalgebra::{DMatrix, DVector};

pub use error::{Error, Result};
pub use graph::{CombinationSet, Topology};
pub use problem::{AgentSpec, CouplingFunction, Moduli, QuadraticCost, SharingProblem, SmoothCost};
pub use solvers::{solve, Mode, NetworkState, RateReport, RunResult, SolverConfig};
pub use validation::{validate, ValidationReport};

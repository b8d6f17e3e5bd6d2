//! Instances shared by the integration suites.
#![allow(dead_code)]

use ped2_core::experiments::{
    generate_instance, qp_oracle, AutoSteps, CouplingSpec, ExperimentSpec, MatrixKind,
    OracleSolution, Steps,
};
use ped2_core::solvers::{
    build_fixed_point, ped2_init, rate_report, FixedPoint, Mode, NetworkState,
};
use ped2_core::{CombinationSet, RateReport, SharingProblem, SolverConfig};

/// `lhs ≤ rhs` up to a 1e-12 slack that scales with `rhs` once it exceeds one.
pub fn le_with_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-12 * rhs.abs().max(1.0)
}

pub struct Instance {
    pub problem: SharingProblem,
    pub cs: CombinationSet,
    pub config: SolverConfig,
    pub oracle: OracleSolution,
    pub fp: FixedPoint,
    pub init: NetworkState,
    pub rate: RateReport,
}

impl Instance {
    pub fn from_spec(spec: &ExperimentSpec, mode: Mode) -> Self {
        let (problem, topology) = generate_instance(spec).unwrap();
        let mut cs = CombinationSet::from_topology(&topology).unwrap();
        if mode == Mode::GeneralForm {
            cs = cs.with_l();
        }
        let config = spec.solver_config(&problem).unwrap().with_mode(mode);
        let oracle = qp_oracle(&problem).unwrap();
        let fp = build_fixed_point(&problem, &cs, &config, &oracle.w_star, &oracle.y_star).unwrap();
        let init = ped2_init(&problem, &cs, &config, None, None).unwrap();
        let rate = rate_report(&problem, &cs, &config, Some((&fp, &init))).unwrap();
        Self {
            problem,
            cs,
            config,
            oracle,
            fp,
            init,
            rate,
        }
    }
}

/// Small upper-bound instance with Gaussian coupling matrices (full row
/// rank since E < Q_k) and automatically chosen steps.
pub fn gaussian_spec(seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        agents: 2 + (seed % 6) as usize,
        local_dim: 4,
        coupling_dim: 3,
        coupling: CouplingSpec::UpperBound,
        coupling_matrices: MatrixKind::Gaussian,
        graph_seed: seed,
        edge_probability: 0.5,
        cost_seed: 1000 + seed,
        steps: Steps::Auto(AutoSteps::Auto),
        max_iter: 200,
        stop_tol: 0.0,
    }
}

/// Upper-bound instance with `B_k = I` and automatic steps.
pub fn identity_spec(seed: u64) -> ExperimentSpec {
    let dim = 2 + (seed % 5) as usize;
    ExperimentSpec {
        agents: 2 + (seed % 7) as usize,
        local_dim: dim,
        coupling_dim: dim,
        coupling: CouplingSpec::UpperBound,
        coupling_matrices: MatrixKind::Identity,
        graph_seed: seed,
        edge_probability: 0.4,
        cost_seed: 5000 + seed,
        steps: Steps::Auto(AutoSteps::Auto),
        max_iter: 200,
        stop_tol: 0.0,
    }
}

pub fn certified(spec: &ExperimentSpec, mode: Mode) -> Instance {
    let inst = Instance::from_spec(spec, mode);
    assert!(
        inst.rate.certified,
        "instance not certified: {:?}",
        inst.rate.reasons
    );
    inst
}

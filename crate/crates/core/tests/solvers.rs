mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::{certified, gaussian_spec, identity_spec};
use ped2_core::experiments::{generate_instance, qp_oracle, CouplingSpec};
use ped2_core::solvers::{
    build_fixed_point, centralized_step, energy_identity_check_with_cy, kkt_residual, ped2_init,
    ped2_step, run_centralized, run_network, CentralState, Mode, KKT_TOL,
};
use ped2_core::{
    AgentSpec, CombinationSet, CouplingFunction, SharingProblem, SolverConfig, Topology,
};

fn single_agent(g: CouplingFunction) -> SharingProblem {
    let r = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
    let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 1.0]);
    SharingProblem::new(
        vec![AgentSpec::quadratic(r, DVector::from_vec(vec![1.0, -2.0]), b).unwrap()],
        g,
    )
    .unwrap()
}

#[test]
fn single_agent_matches_centralized_iteration() {
    let g = CouplingFunction::UpperBoundIndicator {
        b: DVector::from_vec(vec![-0.5, 0.2]),
    };
    let problem = single_agent(g);
    let cs = CombinationSet::from_topology(&Topology::new(1, []).unwrap()).unwrap();
    let config = SolverConfig::new(0.2, 0.3).unwrap();
    let mut net = ped2_init(&problem, &cs, &config, None, None).unwrap();
    let mut central = CentralState::zeros(&problem);
    for _ in 0..300 {
        net = ped2_step(&net, &problem, &cs, &config).unwrap();
        central = centralized_step(&central, &problem, &config).unwrap();
        assert!((net.stacked_w() - &central.w).amax() <= 1e-12);
        assert!((&net.agents[0].y - &central.lambda).amax() <= 1e-12);
    }
}

#[test]
fn zero_coupling_is_gradient_descent() {
    let problem = single_agent(CouplingFunction::Zero { dim: 2 });
    let cs = CombinationSet::from_topology(&Topology::new(1, []).unwrap()).unwrap();
    let config = SolverConfig::new(0.1, 1.0).unwrap();
    let r = problem.agents()[0]
        .cost
        .as_quadratic()
        .unwrap()
        .hessian()
        .clone();
    let rv = problem.agents()[0]
        .cost
        .as_quadratic()
        .unwrap()
        .linear()
        .clone();
    let mut net = ped2_init(&problem, &cs, &config, None, None).unwrap();
    let mut w = DVector::zeros(2);
    for _ in 0..100 {
        net = ped2_step(&net, &problem, &cs, &config).unwrap();
        w = &w - (&r * &w + &rv) * 0.1;
        assert!((net.stacked_w() - &w).amax() <= 1e-13);
        assert_eq!(net.agents[0].y, DVector::zeros(2));
    }
}

#[test]
fn first_message_uses_initial_dual() {
    let inst = certified(&gaussian_spec(3), Mode::Ped2);
    let k = inst.problem.num_agents();
    let e = inst.problem.coupling_dim();
    let y0 = DVector::from_fn(k * e, |i, _| 0.1 * i as f64 - 0.3);
    let w0 = DVector::from_fn(inst.problem.primal_dim(), |i, _| (i as f64).sin());
    let init = ped2_init(&inst.problem, &inst.cs, &inst.config, Some(&w0), Some(&y0)).unwrap();
    let next = ped2_step(&init, &inst.problem, &inst.cs, &inst.config).unwrap();
    for (kk, (a, spec)) in next.agents.iter().zip(inst.problem.agents()).enumerate() {
        let y_prev = y0.rows(kk * e, e).into_owned();
        let expected = &y_prev + &spec.b * &a.w * inst.config.mu_y;
        assert!((&a.z - expected).amax() <= 1e-14);
    }
}

/// Direct solve of `[R Bᵀ; B 0] (w, y) = (−r, b)`.
fn equality_kkt(problem: &SharingProblem, b: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let q = problem.primal_dim();
    let e = problem.coupling_dim();
    let mut m = DMatrix::zeros(q + e, q + e);
    let mut rhs = DVector::zeros(q + e);
    let mut off = 0;
    for spec in problem.agents() {
        let quad = spec.cost.as_quadratic().unwrap();
        let n = spec.dim();
        m.view_mut((off, off), (n, n)).copy_from(quad.hessian());
        m.view_mut((off, q), (n, e)).copy_from(&spec.b.transpose());
        m.view_mut((q, off), (e, n)).copy_from(&spec.b);
        rhs.rows_mut(off, n).copy_from(&(-quad.linear()));
        off += n;
    }
    rhs.rows_mut(q, e).copy_from(b);
    let sol = m.lu().solve(&rhs).unwrap();
    (sol.rows(0, q).into_owned(), sol.rows(q, e).into_owned())
}

#[test]
fn equality_qp_fixed_point_and_centralized_run() {
    for seed in 0..5 {
        let mut spec = gaussian_spec(40 + seed);
        spec.coupling = CouplingSpec::Equality;
        let (problem, topo) = generate_instance(&spec).unwrap();
        let CouplingFunction::EqualityIndicator { b } = problem.coupling().clone() else {
            unreachable!()
        };
        let (w, y) = equality_kkt(&problem, &b);
        assert!(kkt_residual(&problem, &w, &y).unwrap() <= 1e-9);

        let oracle = qp_oracle(&problem).unwrap();
        assert!((&oracle.w_star - &w).amax() <= 1e-9);
        assert!((&oracle.y_star - &y).amax() <= 1e-9);

        let cs = CombinationSet::from_topology(&topo).unwrap();
        let config = spec.solver_config(&problem).unwrap();
        let fp = build_fixed_point(&problem, &cs, &config, &w, &y).unwrap();
        assert!(
            fp.residuals.iter().all(|&r| r <= 1e-9),
            "{:?}",
            fp.residuals
        );
        let state = fp.network_state(&problem, &config, Mode::Ped2);
        let next = ped2_step(&state, &problem, &cs, &config).unwrap();
        for (a, b) in next.agents.iter().zip(&state.agents) {
            assert!((&a.w - &b.w).amax() <= 1e-10 && (&a.y - &b.y).amax() <= 1e-10);
        }

        let cfg = config
            .clone()
            .with_mode(Mode::Centralized)
            .with_max_iter(200_000)
            .with_stop_tol(1e-14);
        let run = run_centralized(&problem, &cfg, CentralState::zeros(&problem), None).unwrap();
        let lambda = &run.central.as_ref().unwrap().lambda;
        assert!(kkt_residual(&problem, &run.w, lambda).unwrap() <= KKT_TOL);
    }
}

#[test]
fn centralized_run_matches_oracle_on_twenty_agents() {
    let mut spec = identity_spec(0);
    spec.agents = 20;
    spec.local_dim = 6;
    spec.coupling_dim = 6;
    spec.edge_probability = 0.3;
    let (problem, _) = generate_instance(&spec).unwrap();
    let oracle = qp_oracle(&problem).unwrap();
    assert!(oracle.kkt_residual <= 1e-9);
    assert!(oracle.residuals.max() <= 1e-9);
    // the centralized dual step sees the stacked B, whose squared norm is K
    // times that of the block-diagonal B_d here
    let base = spec.solver_config(&problem).unwrap();
    let cfg = SolverConfig::new(base.mu_w, base.mu_y / problem.num_agents() as f64)
        .unwrap()
        .with_mode(Mode::Centralized)
        .with_max_iter(100_000)
        .with_stop_tol(0.0);
    let run = run_centralized(&problem, &cfg, CentralState::zeros(&problem), None).unwrap();
    assert_eq!(run.iterations, 100_000);
    let dist = (&run.w - &oracle.w_star).norm();
    assert!(dist <= 1e-6, "distance {dist}");
}

#[test]
fn duals_reach_consensus() {
    for seed in 0..5 {
        let mut spec = identity_spec(60 + seed);
        spec.max_iter = 50_000;
        spec.stop_tol = 1e-13;
        let inst = certified(&spec, Mode::Ped2);
        let run = run_network(
            &inst.problem,
            &inst.cs,
            &inst.config,
            inst.init.clone(),
            None,
        )
        .unwrap();
        let net = run.network.unwrap();
        assert!(
            net.dual_disagreement() < 1e-8,
            "disagreement {}",
            net.dual_disagreement()
        );
        assert!((net.mean_y() - &inst.oracle.y_star).amax() < 1e-8);
    }
}

#[test]
fn perturbed_dual_weight_breaks_energy_identity() {
    let inst = certified(&gaussian_spec(5), Mode::GeneralForm);
    let mut states = vec![inst.init.clone()];
    for _ in 0..50 {
        let s = ped2_core::solvers::general_step(
            states.last().unwrap(),
            &inst.problem,
            &inst.cs,
            &inst.config,
        )
        .unwrap();
        states.push(s);
    }
    let c_y = inst.config.c_y();
    let exact = energy_identity_check_with_cy(
        &states,
        &inst.fp,
        &inst.problem,
        &inst.cs,
        &inst.config,
        c_y,
    )
    .unwrap();
    let off = energy_identity_check_with_cy(
        &states,
        &inst.fp,
        &inst.problem,
        &inst.cs,
        &inst.config,
        1.5 * c_y,
    )
    .unwrap();
    assert!(exact <= 1e-8);
    assert!(off > 1e-4, "perturbed weight gave {off}");
}

#[test]
fn general_form_needs_l_and_x() {
    let inst = certified(&gaussian_spec(1), Mode::Ped2);
    let err = ped2_core::solvers::general_step(&inst.init, &inst.problem, &inst.cs, &inst.config);
    assert!(err.is_err());
}

#[test]
fn oversized_steps_diverge() {
    let inst = certified(&identity_spec(2), Mode::Ped2);
    let cfg = SolverConfig::new(50.0, 50.0).unwrap().with_max_iter(10_000);
    let err = run_network(&inst.problem, &inst.cs, &cfg, inst.init.clone(), None).unwrap_err();
    assert!(matches!(err, ped2_core::Error::Divergence { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixed_point_is_invariant(seed in 0u64..10_000, identity in any::<bool>()) {
        let spec = if identity { identity_spec(seed) } else { gaussian_spec(seed) };
        let inst = certified(&spec, Mode::Ped2);
        prop_assert!(inst.fp.residuals.iter().all(|&r| r <= 1e-9));
        let state = inst.fp.network_state(&inst.problem, &inst.config, Mode::Ped2);
        let next = ped2_step(&state, &inst.problem, &inst.cs, &inst.config).unwrap();
        for (a, b) in next.agents.iter().zip(&state.agents) {
            prop_assert!((&a.w - &b.w).amax() <= 1e-10);
            prop_assert!((&a.y - &b.y).amax() <= 1e-10);
            prop_assert!((&a.z - &b.z).amax() <= 1e-10);
        }
    }

    #[test]
    fn forms_agree(seed in 0u64..10_000) {
        let inst = certified(&gaussian_spec(seed), Mode::GeneralForm);
        let mut g = inst.init.clone();
        let mut p = ped2_core::NetworkState { x: None, ..inst.init.clone() };
        for _ in 0..200 {
            g = ped2_core::solvers::general_step(&g, &inst.problem, &inst.cs, &inst.config).unwrap();
            p = ped2_step(&p, &inst.problem, &inst.cs, &inst.config).unwrap();
        }
        prop_assert!((g.stacked_w() - p.stacked_w()).amax() <= 1e-10);
        prop_assert!((g.stacked_y() - p.stacked_y()).amax() <= 1e-10);
    }
}

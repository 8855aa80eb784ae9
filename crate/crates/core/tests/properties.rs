//! Property tests for the structural invariants: boundary-port algebra,
//! discretization structure, shaping optimality and the midpoint
//! integrator's exact energy bookkeeping.

mod support;

use nalgebra::{DMatrix, DVector};
use phs_control::linalg;
use phs_control::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use support::*;

fn string() -> ContinuousPlant {
    ContinuousPlant::uniform_string(2.0, 1.4e6, 1.225, 1e-3).unwrap()
}

fn psd_from_entries(m: usize, entries: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_fn(m, m, |i, j| entries[i * m + j]);
    &b * b.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_pass_flag_matches_formula(entries in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let plant = string();
        let w = DMatrix::from_fn(2, 4, |i, j| entries[i * 4 + j]);
        let report = validate_boundary_matrix(&w, &plant).unwrap();
        let gram = &w * model::sigma_matrix(1) * w.transpose();
        let min_eig = linalg::min_symmetric_eigenvalue(&gram);
        let expected = linalg::rank(&w) == 2 && min_eig >= -1e-12 * gram.norm().max(1.0);
        prop_assert_eq!(report.pass, expected);
    }

    #[test]
    fn boundary_port_map_is_linear(
        z1 in proptest::collection::vec(-10.0f64..10.0, 4),
        z2 in proptest::collection::vec(-10.0f64..10.0, 4),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let map = build_boundary_port_map(&string()).unwrap();
        let (l1, o1) = (DVector::from_vec(z1[..2].to_vec()), DVector::from_vec(z1[2..].to_vec()));
        let (l2, o2) = (DVector::from_vec(z2[..2].to_vec()), DVector::from_vec(z2[2..].to_vec()));
        let (f1, e1) = map.port_variables(&l1, &o1).unwrap();
        let (f2, e2) = map.port_variables(&l2, &o2).unwrap();
        let (fc, ec) = map
            .port_variables(&(&l1 * a + &l2 * b), &(&o1 * a + &o2 * b))
            .unwrap();
        prop_assert!((&fc - (&f1 * a + &f2 * b)).norm() <= 1e-12 * fc.norm().max(1.0));
        prop_assert!((&ec - (&e1 * a + &e2 * b)).norm() <= 1e-12 * ec.norm().max(1.0));
    }

    #[test]
    fn assembled_structure_is_skew_and_psd(p in 1usize..16, gamma in 0.05f64..0.95) {
        let disc = discretize(&string(), p, gamma).unwrap();
        let j = disc.j_full();
        prop_assert_eq!((j.clone() + j.transpose()).norm(), 0.0);
        prop_assert!(linalg::min_symmetric_eigenvalue(&disc.r_full()) >= 0.0);
    }

    #[test]
    fn hamiltonian_is_quadratic(p in 1usize..10, scale in -4.0f64..4.0) {
        let disc = discretize(&string(), p, 0.5).unwrap();
        let x1 = DVector::from_fn(p, |i, _| ((i * 7 % 5) as f64) - 2.0);
        let x2 = DVector::from_fn(p, |i, _| ((i * 3 % 4) as f64) * 0.5);
        let h = disc.hamiltonian(&x1, &x2).unwrap();
        let h_scaled = disc.hamiltonian(&(&x1 * scale), &(&x2 * scale)).unwrap();
        prop_assert!((h_scaled - scale * scale * h).abs() <= 1e-12 * h_scaled.abs().max(1.0));
    }

    #[test]
    fn residual_is_convex(
        e1 in proptest::collection::vec(-1.0f64..1.0, 9),
        e2 in proptest::collection::vec(-1.0f64..1.0, 9),
        t in 0.0f64..1.0,
    ) {
        let ji = build_ji(6, 0.5).unwrap();
        let patch = build_patch_map(6, 3).unwrap();
        let qm = DMatrix::from_diagonal_element(6, 6, 1.0);
        let problem = ShapingProblem::new(&ji, &patch, qm).unwrap();
        let x1 = psd_from_entries(3, &e1);
        let x2 = psd_from_entries(3, &e2);
        let blend = &x1 * t + &x2 * (1.0 - t);
        let f_blend = residual_f(&blend, &problem).unwrap();
        let f1 = residual_f(&x1, &problem).unwrap();
        let f2 = residual_f(&x2, &problem).unwrap();
        prop_assert!(f_blend <= t * f1 + (1.0 - t) * f2 + 1e-12);
    }

    #[test]
    fn svd_residual_identity_holds(
        diag in proptest::collection::vec(0.0f64..5.0, 8),
        m_index in 0usize..3,
    ) {
        let m = [1usize, 2, 4][m_index];
        let ji = build_ji(8, 0.5).unwrap();
        let patch = build_patch_map(8, m).unwrap();
        let qm = DMatrix::from_diagonal(&DVector::from_vec(diag));
        let problem = ShapingProblem::new(&ji, &patch, qm.clone()).unwrap();
        let solution = solve_under_actuated(&problem).unwrap();
        let direct = solution.residual * solution.residual;
        let identity = solution.residual_squared_from_svd(&qm);
        let scale = (qm.norm() * qm.norm()).max(f64::MIN_POSITIVE);
        prop_assert!((direct - identity).abs() <= 1e-9 * scale);
    }

    #[test]
    fn x_hat_and_qc_stay_psd(
        diag in proptest::collection::vec(0.0f64..5.0, 8),
        m_index in 0usize..3,
    ) {
        let m = [2usize, 4, 8][m_index];
        let ji = build_ji(8, 0.5).unwrap();
        let patch = build_patch_map(8, m).unwrap();
        let qm = DMatrix::from_diagonal(&DVector::from_vec(diag));
        let problem = ShapingProblem::new(&ji, &patch, qm).unwrap();
        let solution = solve_under_actuated(&problem).unwrap();
        prop_assert!(
            linalg::min_symmetric_eigenvalue(&solution.x_hat)
                >= -1e-10 * solution.x_hat.norm().max(1.0)
        );
        let jm = build_ji(m, 0.5).unwrap();
        let (_, qc) = choose_bc_qc_under(&solution.x_hat, &jm).unwrap();
        prop_assert!(linalg::min_symmetric_eigenvalue(&qc) >= -1e-10 * qc.norm().max(1.0));
    }

    #[test]
    fn bc_qc_roundtrip_reproduces_x_hat(
        entries in proptest::collection::vec(-2.0f64..2.0, 100),
        m in 1usize..=10,
    ) {
        let x_hat = psd_from_entries(m, &entries[..m * m]);
        let jm = build_ji(m, 0.5).unwrap();
        let (bc, qc) = choose_bc_qc_under(&x_hat, &jm).unwrap();
        let back = bc.transpose() * qc * bc;
        prop_assert!((back - &x_hat).norm() <= 1e-12 * x_hat.norm().max(1.0));
    }

    #[test]
    fn midpoint_energy_balance_is_exact(
        seed in 0u64..1000,
        dim in 2usize..6,
    ) {
        // random (J - R) Q system: H(next) - H(now) = -dt (Qx)_mid R (Qx)_mid
        let mut rng = StdRng::seed_from_u64(seed);
        let j_raw = DMatrix::from_fn(dim, dim, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let j = &j_raw - j_raw.transpose();
        let r_raw = DMatrix::from_fn(dim, dim, |_, _| rand::Rng::random_range(&mut rng, -0.5..0.5));
        let r = &r_raw * r_raw.transpose();
        let q_raw = DMatrix::from_fn(dim, dim, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let q = &q_raw * q_raw.transpose() + DMatrix::identity(dim, dim);
        let a = (&j - &r) * &q;
        let x0 = DVector::from_fn(dim, |i, _| rand::Rng::random_range(&mut rng, -1.0..1.0) + i as f64 * 0.1);
        let dt = 1e-3;
        let stepper = MidpointStepper::new(&a, dt).unwrap();
        let mut x = x0;
        for _ in 0..20 {
            let next = stepper.step(&x).unwrap();
            let mid = (&x + &next) * 0.5;
            let qx = &q * mid;
            let dissipated = dt * (&r * &qx).dot(&qx);
            let h_now = 0.5 * (&q * &x).dot(&x);
            let h_next = 0.5 * (&q * &next).dot(&next);
            let residual = (h_next - h_now + dissipated).abs();
            prop_assert!(residual <= 1e-10 * h_now.max(1e-12));
            x = next;
        }
    }

    #[test]
    fn pole_sets_are_conjugate_closed(seed in 0u64..200, dim in 2usize..8) {
        let mut rng = StdRng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9));
        let a = DMatrix::from_fn(dim, dim, |_, _| rand::Rng::random_range(&mut rng, -2.0..2.0));
        let ps = poles(&a).unwrap();
        prop_assert!(ps.is_conjugate_closed(1e-6));
    }
}

/// Feedback identity: open-loop field plus the injected state feedback
/// equals the reduced closed-loop field, for arbitrary states.
#[test]
fn state_feedback_matches_reduced_field() {
    let plant = baseline_plant(12);
    for m in [12usize, 4, 2] {
        let ctrl = if m == 12 {
            Controller::design_fully_actuated(
                &plant,
                plant.uniform_energy_target(2e6).unwrap(),
                1500.0,
            )
            .unwrap()
        } else {
            Controller::design_under_actuated(
                &plant,
                m,
                plant.uniform_energy_target(2e6).unwrap(),
                1500.0,
            )
            .unwrap()
        };
        let reduced = assemble_reduced(&plant, &ctrl).unwrap();
        let a_red = reduced.system_matrix();
        let a_open = plant.open_loop_matrix();
        let mut rng = StdRng::seed_from_u64(42 + m as u64);
        for _ in 0..10 {
            let x = DVector::from_fn(24, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let x1 = x.rows(0, 12).into_owned();
            let x2 = x.rows(12, 12).into_owned();
            let u = state_feedback(&plant, &ctrl, &x1, &x2).unwrap();
            let mut field_open = &a_open * &x;
            let injected = field_open.rows(12, 12) + &plant.b0d * &u;
            field_open.rows_mut(12, 12).copy_from(&injected);
            let field_red = &a_red * &x;
            let scale = field_red.norm().max(1.0);
            assert!((field_open - field_red).norm() <= 1e-9 * scale);
        }
    }
}

/// Brute-force global-optimality check on small instances: a projected
/// gradient oracle with 500 restarts never undercuts the SVD optimum.
#[test]
fn svd_optimum_survives_500_restarts() {
    let mut rng = StdRng::seed_from_u64(0xca51);
    for (p, m) in [(4usize, 2usize), (6, 2), (8, 1), (8, 2), (8, 4), (6, 1)] {
        let ji = build_ji(p, 0.5).unwrap();
        let patch = build_patch_map(p, m).unwrap();
        let qm = random_diagonal_target(p, &mut rng, 5.0);
        let problem = ShapingProblem::new(&ji, &patch, qm).unwrap();
        let solution = solve_under_actuated(&problem).unwrap();
        let oracle = projected_gradient_best_f(&problem, &mut rng, 500, 300);
        assert!(
            oracle >= solution.residual - 1e-8,
            "oracle found f = {oracle} below SVD optimum {} for p={p}, m={m}",
            solution.residual
        );
    }
}

/// Random-initial-condition equivalence of the dynamic interconnection
/// and the state-feedback form, both actuation modes.
#[test]
fn dynamic_static_equivalence_random_ic() {
    let plant = baseline_plant(10);
    let mut rng = StdRng::seed_from_u64(7);
    for m in [10usize, 5] {
        let ctrl = if m == 10 {
            Controller::design_fully_actuated(
                &plant,
                plant.uniform_energy_target(1e6).unwrap(),
                800.0,
            )
            .unwrap()
        } else {
            Controller::design_under_actuated(
                &plant,
                m,
                plant.uniform_energy_target(1e6).unwrap(),
                800.0,
            )
            .unwrap()
        };
        let dynamic = assemble_dynamic(&plant, &ctrl).unwrap();
        let reduced = assemble_reduced(&plant, &ctrl).unwrap();
        let x1 = DVector::from_fn(10, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let x2 = DVector::from_fn(10, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let xc = ctrl.casimir_consistent_init(&plant, &x1).unwrap();
        let x0_dyn = dynamic.stack_state(&x1, &x2, &xc).unwrap();
        let mut x0_red = DVector::zeros(20);
        x0_red.rows_mut(0, 10).copy_from(&x1);
        x0_red.rows_mut(10, 10).copy_from(&x2);

        let step_dyn = MidpointStepper::new(&dynamic.a_cl, 5e-5).unwrap();
        let step_red = MidpointStepper::new(&reduced.system_matrix(), 5e-5).unwrap();
        let mut xd = x0_dyn;
        let mut xr = x0_red;
        for _ in 0..1000 {
            xd = step_dyn.step(&xd).unwrap();
            xr = step_red.step(&xr).unwrap();
        }
        let gap = (xd.rows(0, 20) - &xr).norm() / xr.norm().max(f64::MIN_POSITIVE);
        assert!(gap <= 1e-8, "m = {m}: relative state gap {gap}");
    }
}

use beamctl_core::beam_dynamics::{duhamel_solve, evolve_free, evolve_to_final, forced_trajectory, trajectory_state};
use beamctl_core::hum_control::{assemble_gramian, solve_hum, synthesize_control, verify_null_control};
use beamctl_core::limit_lab::{sweep, test_battery};
use beamctl_core::modal_space::norm;
use beamctl_core::{
    BeamError, ControlField, ControlProblem, ControlRegion, DataSpace, ModalState, Regularization, SweepConfig,
};
use proptest::prelude::*;

#[test]
fn hum_pipeline_steers_to_rest() {
    let data = ModalState::smooth_decay(12);
    for region in [ControlRegion::internal(0.25, 6).unwrap(), ControlRegion::pointwise(0.3).unwrap()] {
        let problem = ControlProblem::new(region, 2.5, data.clone()).unwrap();
        let (adjoint, diag) = solve_hum(&problem).unwrap();
        assert!(diag.solve_residual < 1e-10);
        let control = synthesize_control(&adjoint, &region, 2.5).unwrap();
        let (fin, abs) = evolve_to_final(&data, &control, 2.5).unwrap();
        let start = norm(&data, DataSpace::L2Vdual).unwrap();
        assert!(abs / start < 1e-6, "residual {abs}");
        assert_eq!(fin.modes(), 12);
        let report = verify_null_control(&problem, &control).unwrap();
        assert!(report.final_residual < 1e-6);
    }
}

#[test]
fn closed_form_trajectory_agrees_with_duhamel() {
    let battery = test_battery(6, 11);
    for field in &battery {
        let forcing = &field.forcing;
        let traj = forced_trajectory(&field.data, forcing).unwrap();
        let a = trajectory_state(&traj, 1.7).unwrap();
        let b = duhamel_solve(&field.data, forcing, 1.7, 6).unwrap();
        for m in 0..6 {
            assert!((a.a()[m] - b.a()[m]).abs() < 1e-9 * (1.0 + b.a()[m].abs()));
            assert!((a.beta()[m] - b.beta()[m]).abs() < 1e-9 * (1.0 + b.beta()[m].abs()));
        }
    }
}

#[test]
fn invisible_mode_without_regularization_is_reported() {
    // sin(mu_m * 2/3) = 0 for m = 1, 4, 7
    let region = ControlRegion::pointwise(2.0 / 3.0).unwrap();
    let problem = ControlProblem::new(region, 2.0, ModalState::smooth_decay(8))
        .unwrap()
        .with_regularization(Regularization::Absolute(0.0))
        .unwrap();
    match solve_hum(&problem) {
        Err(BeamError::NonInvertible { mode, .. }) => assert!([1, 4, 7].contains(&mode), "mode {mode}"),
        other => panic!("expected NonInvertible, got {other:?}"),
    }
}

#[test]
fn gramian_is_symmetric_and_positive() {
    let g = assemble_gramian(&ControlRegion::internal(1.0 / 3.0, 8).unwrap(), 2.0, 10).unwrap();
    let m = g.matrix();
    assert!((&m - m.transpose()).amax() < 1e-14 * m.amax());
    assert!(g.min_eigenvalue() > 0.0);
}

#[test]
fn non_strategic_sweep_reports_divergence() {
    let cfg = SweepConfig::new(2, 3, vec![4, 8, 16], ModalState::smooth_decay(8));
    let out = sweep(&cfg).unwrap();
    assert!(!out.strategic.strategic);
    assert!(out.reference.is_none());
    let div = out.divergence.unwrap();
    assert_eq!(div.witness_m, 1);
    assert!(div.invisible_modes.contains(&1));
    assert_eq!(out.records.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_motion_conserves_energy(
        a in proptest::collection::vec(-1.0f64..1.0, 1..12),
        t in 0.0f64..10.0,
    ) {
        let beta: Vec<f64> = a.iter().map(|x| 0.5 - x).collect();
        let s = ModalState::new(a, beta).unwrap();
        let e0 = norm(&s, DataSpace::L2Vdual).unwrap();
        let e1 = norm(&evolve_free(&s, t), DataSpace::L2Vdual).unwrap();
        prop_assert!((e0 - e1).abs() <= 1e-12 * (1.0 + e0));
    }

    #[test]
    fn zero_control_reproduces_free_motion(
        a in proptest::collection::vec(-1.0f64..1.0, 1..10),
        t in 0.0f64..4.0,
    ) {
        let s = ModalState::new(a.clone(), a.iter().map(|x| x * 0.3).collect()).unwrap();
        let forced = duhamel_solve(&s, &ControlField::zero(s.modes()), t, s.modes()).unwrap();
        let free = evolve_free(&s, t);
        for m in 0..s.modes() {
            prop_assert!((forced.a()[m] - free.a()[m]).abs() < 1e-13);
            prop_assert!((forced.beta()[m] - free.beta()[m]).abs() < 1e-13);
        }
    }
}

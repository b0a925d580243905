mod common;

use ipm_core::control::{adjoint_rhs, hamiltonian, ControlSchedule, ObjectiveWeights};
use ipm_core::integrate::*;
use ipm_core::{ControlTriple, Error, ModelParams, State};
use proptest::prelude::*;
use rand::Rng;

const S0: State = State::new(0.2, 0.07, 0.05, 0.5);

#[test]
fn published_long_run_is_positive_and_bounded() {
    let p = ModelParams::published();
    let grid = TimeGrid::with_step(0.0, 600.0, 0.05).unwrap();
    let traj = integrate_forward(&p, &S0, &grid, None).unwrap();
    assert_eq!(traj.values.len(), 12001);
    assert!(traj.values.iter().flatten().all(|v| *v >= 0.0));
    let cert = bounds_certificate(&p, &traj);
    assert!(cert.satisfied && !cert.tail_only, "{cert:?}");
}

/// Observed convergence order from runs at h and h/2 against an h/8 reference.
fn observed_order(p: &ModelParams, tf: f64, h: f64) -> f64 {
    let run = |step: f64| {
        integrate_forward(p, &S0, &TimeGrid::with_step(0.0, tf, step).unwrap(), None).unwrap().last()
    };
    let (coarse, half, reference) = (run(h), run(h / 2.0), run(h / 8.0));
    let err = |y: [f64; 4]| y.iter().zip(reference).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    (err(coarse) / err(half)).log2()
}

#[test]
fn rk4_is_fourth_order() {
    let order = observed_order(&ModelParams::published(), 600.0, 2.0);
    println!("observed order {order}");
    assert!((3.7..=4.3).contains(&order), "observed order {order}");
}

#[test]
fn adjoint_rhs_is_minus_hamiltonian_gradient() {
    let mut rng = common::rng(21);
    let w = ObjectiveWeights::published();
    for _ in 0..100 {
        let p = common::random_params(&mut rng);
        let y: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.01..2.0));
        let lam: [f64; 4] = std::array::from_fn(|_| rng.random_range(-20.0..20.0));
        let u = ControlTriple::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let got = adjoint_rhs(&p, &w, &y, &u, &lam);
        for j in 0..4 {
            let h = f64::EPSILON.cbrt() * y[j].abs().max(1.0);
            let mut up = y;
            let mut dn = y;
            up[j] += h;
            dn[j] -= h;
            let fd = -(hamiltonian(&p, &w, &up, &u, &lam) - hamiltonian(&p, &w, &dn, &u, &lam)) / (2.0 * h);
            let scale = got[j].abs().max(fd.abs()).max(1e-6);
            assert!((got[j] - fd).abs() <= 1e-6 * scale, "component {j}: {} vs {fd}", got[j]);
        }
    }
}

#[test]
fn homogeneous_adjoint_stays_zero() {
    let p = ModelParams::published();
    let w = ObjectiveWeights { q: 0.0, r: 0.0, ..ObjectiveWeights::published() };
    let grid = TimeGrid::with_step(0.0, 60.0, 0.05).unwrap();
    let u = ControlSchedule::constant(grid, ControlTriple::ZERO);
    let traj = integrate_forward(&p, &S0, &grid, Some(&u)).unwrap();
    let lam = integrate_adjoint_backward(&p, &traj, &u, &w).unwrap();
    assert!(lam.values.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn adjoint_terminal_value_is_zero() {
    let p = ModelParams::published();
    let w = ObjectiveWeights::published();
    let grid = TimeGrid::with_step(0.0, 60.0, 0.05).unwrap();
    let u = ControlSchedule::constant(grid, ControlTriple::new(0.2, 0.3, 0.4));
    let traj = integrate_forward(&p, &S0, &grid, Some(&u)).unwrap();
    let lam = integrate_adjoint_backward(&p, &traj, &u, &w).unwrap();
    assert_eq!(lam.last(), [0.0; 4]);
    assert!(lam.values[0].iter().any(|v| *v != 0.0));
}

#[test]
fn mismatched_grids_are_rejected() {
    let p = ModelParams::published();
    let grid = TimeGrid::with_step(0.0, 10.0, 0.05).unwrap();
    let u = ControlSchedule::constant(grid.refined(2), ControlTriple::ZERO);
    assert!(matches!(integrate_forward(&p, &S0, &grid, Some(&u)), Err(Error::GridMismatch(_))));
}

#[test]
fn certificate_uses_tail_when_start_is_outside() {
    let p = ModelParams::published();
    let grid = TimeGrid::with_step(0.0, 600.0, 0.05).unwrap();
    let traj = integrate_forward(&p, &State::new(1.5, 0.4, 0.3, 3.0), &grid, None).unwrap();
    let cert = bounds_certificate(&p, &traj);
    assert!(cert.tail_only && cert.satisfied, "{cert:?}");
}

#[test]
fn blow_up_is_reported() {
    let p = ModelParams { r: 50.0, ..ModelParams::published() };
    let grid = TimeGrid::with_step(0.0, 10.0, 0.5).unwrap();
    let err = integrate_forward(&p, &State::new(1e3, 0.0, 0.0, 0.0), &grid, None).unwrap_err();
    assert!(matches!(err, Error::StepUnstable { .. } | Error::PositivityViolated { .. }), "{err:?}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trajectories_stay_nonnegative(seed in any::<u64>(), x in 0.0..2.0f64, s in 0.0..1.0f64, i in 0.0..1.0f64, a in 0.0..3.0f64) {
        let p = common::random_params(&mut common::rng(seed));
        let grid = TimeGrid::with_step(0.0, 200.0, 0.05).unwrap();
        let traj = integrate_forward(&p, &State::new(x, s, i, a), &grid, None).unwrap();
        prop_assert!(traj.values.iter().flatten().all(|v| *v >= 0.0 && v.is_finite()));
    }
}

mod common;

use ipm_core::{jacobian, rhs, rhs_controlled, ControlTriple, ModelParams, State};
use proptest::prelude::*;

fn fd_jacobian(p: &ModelParams, st: &State) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for c in 0..4 {
        let h = f64::EPSILON.cbrt() * st.to_array()[c].abs().max(1.0);
        let mut up = st.to_array();
        let mut dn = st.to_array();
        up[c] += h;
        dn[c] -= h;
        let fu = rhs(p, &State::from_array(up)).unwrap().0;
        let fd = rhs(p, &State::from_array(dn)).unwrap().0;
        for r in 0..4 {
            out[r][c] = (fu[r] - fd[r]) / (2.0 * h);
        }
    }
    out
}

fn assert_jacobian_matches(p: &ModelParams, st: &State) {
    let j = jacobian(p, st).unwrap();
    let fd = fd_jacobian(p, st);
    let scale = j.amax();
    for r in 0..4 {
        for c in 0..4 {
            let tol = 1e-6 * j[(r, c)].abs().max(1e-3 * scale);
            assert!((j[(r, c)] - fd[r][c]).abs() <= tol, "entry ({r},{c}): {} vs {}", j[(r, c)], fd[r][c]);
        }
    }
}

#[test]
fn jacobian_matches_finite_differences_at_initial_state() {
    assert_jacobian_matches(&ModelParams::published(), &State::new(0.2, 0.07, 0.05, 0.5));
}

#[test]
fn last_jacobian_row_is_constant() {
    let p = ModelParams::published();
    for st in [State::new(0.1, 0.2, 0.3, 0.4), State::new(3.0, 0.0, 1.0, 9.0)] {
        let j = jacobian(&p, &st).unwrap();
        assert_eq!([j[(3, 0)], j[(3, 1)], j[(3, 2)], j[(3, 3)]], [0.0, p.sigma, p.sigma, -p.eta]);
    }
}

#[test]
fn unit_controls_at_initial_state() {
    let p = ModelParams::published();
    let st = State::new(0.2, 0.07, 0.05, 0.5);
    assert_eq!(rhs_controlled(&p, &st, &ControlTriple::UNIT).unwrap(), rhs(&p, &st).unwrap());
}

#[test]
fn overflow_is_reported() {
    let p = ModelParams::published();
    assert!(rhs(&p, &State::new(1e300, 1e300, 0.0, 0.0)).is_err());
}

fn params() -> impl Strategy<Value = ModelParams> {
    any::<u64>().prop_map(|seed| common::random_params(&mut common::rng(seed)))
}

fn interior_state() -> impl Strategy<Value = State> {
    (0.01..3.0f64, 0.01..2.0f64, 0.01..2.0f64, 0.01..5.0f64).prop_map(|(x, s, i, a)| State::new(x, s, i, a))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn unit_controls_reproduce_uncontrolled(p in params(), st in interior_state()) {
        prop_assert_eq!(rhs_controlled(&p, &st, &ControlTriple::UNIT).unwrap(), rhs(&p, &st).unwrap());
    }

    #[test]
    fn analytic_jacobian_matches_differences(p in params(), st in interior_state()) {
        assert_jacobian_matches(&p, &st);
    }

    #[test]
    fn pest_free_manifold_is_invariant(p in params(), x in 0.0..5.0f64) {
        let f = rhs(&p, &State::new(x, 0.0, 0.0, p.omega / p.eta)).unwrap().0;
        prop_assert_eq!(f[1], 0.0);
        prop_assert_eq!(f[2], 0.0);
        prop_assert!(f[3].abs() <= 1e-15 * p.omega);
    }
}

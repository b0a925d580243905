mod common;

use ipm_core::equilibria::*;
use ipm_core::{rhs, ModelParams, State};
use proptest::prelude::*;

#[test]
fn closed_form_states_for_published() {
    let p = ModelParams::published();
    let e0 = axial_equilibrium(&p);
    let e1 = pest_free_equilibrium(&p);
    assert_eq!(e0.state, State::new(0.0, 0.0, 0.0, 0.2));
    assert_eq!(e1.state, State::new(1.0, 0.0, 0.0, 0.2));
    assert!(e0.residual_norm <= 1e-12 && e1.residual_norm <= 1e-12);
    let mut q = p;
    q.omega = 0.0;
    assert_eq!(axial_equilibrium(&q).state, State::default());
    q = p;
    q.k *= 2.0;
    let e1q = pest_free_equilibrium(&q);
    assert_eq!((e1q.state.x, e1q.state.aw), (2.0 * e1.state.x, e1.state.aw));
}

/// Scenarios with a healthy-pest-free state: strong infected-pest conversion.
fn e3_params() -> Vec<ModelParams> {
    [(0.5, 0.5), (0.8, 0.5), (2.0, 0.9)]
        .into_iter()
        .map(|(alpha, phi)| ModelParams { alpha, phi, ..ModelParams::published() })
        .collect()
}

/// Infected-pest equation divided by I, along the healthy-pest-free branch.
fn branch_residual(p: &ModelParams, x: f64) -> f64 {
    let (i, aw) = healthy_branch(p, x);
    rhs(p, &State::new(x, 0.0, i, aw)).unwrap().0[2] / i
}

#[test]
fn cubic_roots_match_bisection_scan() {
    for p in e3_params() {
        let cubic = cubic_coefficients(&p).unwrap();
        let n = 20_000;
        let xs: Vec<f64> = (1..n).map(|k| p.k * k as f64 / n as f64).collect();
        let mut scanned = Vec::new();
        for w in xs.windows(2) {
            let (fa, fb) = (cubic.eval(w[0]), cubic.eval(w[1]));
            if fa.signum() != fb.signum() {
                let (mut lo, mut hi) = (w[0], w[1]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if cubic.eval(mid).signum() == cubic.eval(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                scanned.push(0.5 * (lo + hi));
            }
        }
        let found: Vec<f64> = healthy_pest_free_equilibria(&p).unwrap().iter().map(|e| e.state.x).collect();
        assert!(!found.is_empty());
        assert_eq!(found.len(), scanned.len());
        for (f, s) in found.iter().zip(&scanned) {
            assert!((f - s).abs() < 1e-10, "{f} vs {s}");
            // The cubic roots also zero the infected-pest equation on the branch.
            assert!(branch_residual(&p, *f).abs() < 1e-9);
        }
    }
}

#[test]
fn cubic_k_dependence() {
    // a1 and a3 are affine in K, a2 too: check linearity through three K values.
    let p = ModelParams::published();
    let at = |k: f64| cubic_coefficients(&ModelParams { k, ..p }).unwrap();
    let (c1, c2, c3) = (at(1.0), at(2.0), at(3.0));
    for (a, b, c) in [(c1.a1, c2.a1, c3.a1), (c1.a2, c2.a2, c3.a2), (c1.a3, c2.a3, c3.a3)] {
        assert!(((c - b) - (b - a)).abs() < 1e-9 * a.abs().max(c.abs()));
    }
}

#[test]
fn degenerate_cubic_denominator() {
    let mut p = ModelParams::published();
    p.alpha = (p.d + p.delta + p.gamma) / (p.phi * p.m2);
    assert_eq!(cubic_coefficients(&p), Err(ipm_core::Error::DegenerateDenominator));
}

#[test]
fn healthy_states_exclude_full_capacity() {
    for p in e3_params() {
        for e in healthy_pest_free_equilibria(&p).unwrap() {
            assert!(e.state.x < p.k && e.state.i > 0.0 && e.state.s == 0.0);
            assert_eq!(e.existence.below_capacity, Some(true));
            assert!(e.residual_norm <= residual_tolerance(&e.state));
        }
    }
}

#[test]
fn coexistence_matches_closed_forms_and_sextic() {
    let scenarios = [ModelParams::published(), common::hopf_params(), common::hopf_params().with_alpha(0.5)];
    for p in scenarios {
        let eqs = coexistence_equilibria(&p);
        assert!(!eqs.is_empty());
        let sextic = eliminated_sextic(&p).unwrap();
        for e in eqs {
            assert!(e.residual_norm <= 1e-9 * (1.0 + e.state.max_norm()));
            let cf = coexistence_closed_form(&p, e.state.aw).unwrap();
            assert!((cf.x - e.state.x).abs() <= 1e-8, "{} vs {}", cf.x, e.state.x);
            assert!(sextic.eval(e.state.aw).abs() <= 1e-6 * sextic.max_magnitude());
        }
    }
}

#[test]
fn published_coexistence_state_and_flag() {
    let p = ModelParams::published();
    let e = &coexistence_equilibria(&p)[0];
    // The printed existence inequality asks for A* > 2.2 here, yet the state exists.
    assert_eq!(e.existence.awareness_threshold, Some(false));
    assert!(e.state.to_array().iter().all(|v| *v > 0.0));
}

#[test]
fn printed_sextic_limit_and_finiteness() {
    let p = ModelParams::published();
    let c = sextic_coefficients(&p).unwrap();
    assert!(c.a.iter().all(|v| v.is_finite()));
    assert_eq!(c.eval(1e-12).signum(), c.a[5].signum());
}

#[test]
fn printed_sextic_deviation_is_reported() {
    // The typeset a3..a5 do not come out of the elimination; this records by how much.
    let p = ModelParams::published();
    let printed = sextic_coefficients(&p).unwrap();
    let exact = eliminated_sextic(&p).unwrap();
    let a_star = coexistence_equilibria(&p)[0].state.aw;
    for k in 0..6 {
        println!("a{}: printed {:.6e} eliminated {:.6e}", k + 1, printed.a[k], exact.a[k]);
    }
    println!("residual at A*: printed {:.3e}, eliminated {:.3e}", printed.eval(a_star), exact.eval(a_star));
    assert!(exact.eval(a_star).abs() <= 1e-9 * exact.max_magnitude());
}

#[test]
fn equilibria_list_contains_all_kinds() {
    let p = common::hopf_params().with_alpha(0.5);
    let all = all_equilibria(&p).unwrap();
    assert_eq!(all[0].kind, EquilibriumKind::Axial);
    assert_eq!(all[1].kind, EquilibriumKind::PestFree);
    assert!(all.iter().any(|e| e.kind == EquilibriumKind::Coexistence));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn every_located_state_is_an_equilibrium(seed in any::<u64>()) {
        let p = common::random_params(&mut common::rng(seed));
        for e in all_equilibria(&p).unwrap() {
            prop_assert!(e.residual_norm <= residual_tolerance(&e.state), "{:?}", e);
            match e.kind {
                EquilibriumKind::PestFree => prop_assert!(e.state.s == 0.0 && e.state.i == 0.0 && e.state.x == p.k),
                EquilibriumKind::HealthyPestFree => prop_assert!(e.state.s == 0.0 && e.state.i > 0.0),
                EquilibriumKind::Coexistence => prop_assert!(e.state.to_array().iter().all(|v| *v > 0.0)),
                EquilibriumKind::Axial => {}
            }
        }
    }

    #[test]
    fn boundary_quadratic_never_has_positive_root(seed in any::<u64>()) {
        let p = common::random_params(&mut common::rng(seed));
        let rep = boundary_equilibrium_check(&p);
        prop_assert!(!rep.has_positive_root);
        prop_assert_eq!(rep.sign_changes, 0);
    }

    #[test]
    fn eliminated_sextic_vanishes_at_located_states(seed in any::<u64>()) {
        let p = common::random_params(&mut common::rng(seed));
        let sextic = eliminated_sextic(&p).unwrap();
        for e in coexistence_equilibria(&p) {
            prop_assert!(sextic.eval(e.state.aw).abs() <= 1e-6 * sextic.max_magnitude());
        }
    }
}

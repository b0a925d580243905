mod common;

use ipm_core::equilibria::{coexistence_equilibria, healthy_pest_free_equilibria, pest_free_equilibrium};
use ipm_core::linalg::{char_poly, eigenvalues, poly_from_roots};
use ipm_core::stability::*;
use ipm_core::{jacobian, Error, ModelParams};
use proptest::prelude::*;

#[test]
fn e0_spectrum_matches_closed_form() {
    let p = ModelParams::published();
    let c = classify_e0(&p).unwrap();
    assert_eq!(c.verdict, Verdict::Unstable);
    assert_eq!(c.witness.unwrap().re, 0.05);
    let mut want = e0_closed_form_eigenvalues(&p).to_vec();
    want.sort_by(|a, b| b.total_cmp(a));
    for (z, w) in c.eigenvalues.iter().zip(&want) {
        assert!((z.re - w).abs() < 1e-10 && z.im == 0.0, "{z} vs {w}");
    }
    assert!((want[2] + 0.0191667).abs() < 1e-7);
}

#[test]
fn e1_thresholds_match_eigenvalue_sign() {
    let mut rng = common::rng(3);
    let (mut stable, mut unstable) = (0, 0);
    for _ in 0..500 {
        let p = common::random_params(&mut rng);
        let c = classify_e1(&p).unwrap();
        let j = jacobian(&p, &pest_free_equilibrium(&p).state).unwrap();
        let eigs = eigenvalues(&j).unwrap();
        let t = thresholds(&p);
        if t.r0 < 1.0 && t.r1 < 1.0 {
            stable += 1;
            assert_eq!(c.verdict, Verdict::Stable);
            assert!(eigs.iter().all(|z| z.re < 0.0));
        } else {
            unstable += 1;
            assert_eq!(c.verdict, Verdict::Unstable);
        }
        // Second eigenvalue at E1 is positive exactly when R0 exceeds one.
        let l2 = p.m1 * p.alpha * p.k - p.lambda * p.omega / p.eta - p.d - p.gamma * p.omega / (p.eta + p.omega);
        assert_eq!(l2 > 0.0, t.r0 > 1.0);
    }
    assert!(stable > 20 && unstable > 20);
}

#[test]
fn cubic_coefficients_factor_the_spectrum() {
    let mut rng = common::rng(5);
    let mut seen = 0;
    while seen < 30 {
        let p = common::random_params(&mut rng);
        let Ok(list) = healthy_pest_free_equilibria(&p) else { continue };
        for e in list {
            seen += 1;
            let rep = classify_e3(&p, &e).unwrap();
            let j = jacobian(&p, &e.state).unwrap();
            assert_eq!(rep.terms.f22, j[(1, 1)]);
            let full = char_poly(&j);
            // (rho - F22)(rho^3 + C1 rho^2 + C2 rho + C3)
            let f = rep.terms.f22;
            let rebuilt = [rep.c1 - f, rep.c2 - f * rep.c1, rep.c3 - f * rep.c2, -f * rep.c3];
            for (a, b) in full.iter().zip(rebuilt) {
                assert!(common::rel_close(*a, b, 1e-6) || (a - b).abs() < 1e-14, "{full:?} vs {rebuilt:?}");
            }
            if rep.verdict == Verdict::Stable {
                assert!(rep.eigenvalues.iter().all(|z| z.re < 0.0));
            }
        }
    }
}

#[test]
fn quartic_coefficients_match_characteristic_polynomial() {
    let mut rng = common::rng(11);
    let mut seen = 0;
    while seen < 30 {
        let p = common::random_params(&mut rng);
        for e in coexistence_equilibria(&p) {
            seen += 1;
            let y = quartic_coefficients(&p, &e.state).unwrap().to_array();
            let j = jacobian(&p, &e.state).unwrap();
            let numeric = poly_from_roots(&eigenvalues(&j).unwrap());
            for k in 0..4 {
                let scale = (4.0 * j.amax()).powi(k as i32 + 1);
                assert!((y[k] - numeric[k]).abs() <= 1e-8 * y[k].abs().max(1e-6 * scale), "y{}: {} vs {}", k + 1, y[k], numeric[k]);
            }
            assert!(common::rel_close(y[0], -j.trace(), 1e-12));
            assert!(common::rel_close(y[3], j.determinant(), 1e-8));
        }
    }
}

#[test]
fn classification_rejects_wrong_kind() {
    let p = ModelParams::published();
    let e1 = pest_free_equilibrium(&p);
    assert!(matches!(classify_estar(&p, &e1), Err(Error::WrongKind { .. })));
    assert!(matches!(classify_e3(&p, &e1), Err(Error::WrongKind { .. })));
}

#[test]
fn psi_reports_missing_coexistence() {
    let p = ModelParams::published();
    assert!(matches!(psi(&p, 0.005), Err(Error::NoCoexistence { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn closed_form_verdicts_agree_with_eigenvalues(seed in any::<u64>()) {
        let p = common::random_params(&mut common::rng(seed));
        classify_e0(&p).unwrap();
        classify_e1(&p).unwrap();
        if let Ok(list) = healthy_pest_free_equilibria(&p) {
            for e in list {
                classify_e3(&p, &e).unwrap();
            }
        }
        for e in coexistence_equilibria(&p) {
            let rep = classify_estar(&p, &e).unwrap();
            if rep.verdict == Verdict::Stable {
                prop_assert!(rep.eigenvalues.iter().all(|z| z.re < 0.0));
            }
        }
    }
}

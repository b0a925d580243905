#![allow(dead_code)]

use ipm_core::ModelParams;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Valid parameter set spread around the published magnitudes.
pub fn random_params(rng: &mut StdRng) -> ModelParams {
    let m1 = rng.random_range(0.3..0.95);
    ModelParams {
        r: log_uniform(rng, 0.02, 0.2),
        k: log_uniform(rng, 0.5, 5.0),
        alpha: log_uniform(rng, 0.005, 1.5),
        phi: rng.random_range(0.1..0.9),
        a: log_uniform(rng, 0.05, 1.0),
        m1,
        m2: rng.random_range(0.1..0.99) * m1,
        lambda: log_uniform(rng, 0.005, 0.1),
        d: log_uniform(rng, 0.005, 0.05),
        delta: log_uniform(rng, 0.02, 0.3),
        gamma: log_uniform(rng, 0.005, 0.1),
        sigma: log_uniform(rng, 0.005, 0.05),
        eta: log_uniform(rng, 0.005, 0.05),
        omega: log_uniform(rng, 0.001, 0.01),
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Hopf scenario: published rates with a larger carrying capacity.
pub fn hopf_params() -> ModelParams {
    ModelParams { k: 4.0, ..ModelParams::published() }
}

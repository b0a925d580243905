use num_complex::Complex64;

use crate::equilibria::{coexistence_equilibria, coexistence_from_seed, Equilibrium};
use crate::error::{Error, Result};
use crate::linalg::eigenvalues;
use crate::model::{jacobian, ModelParams, State};
use crate::stability::{quartic_coefficients, QuarticCoefficients};

/// Relative tolerance on `|Psi|` for a refined crossing.
pub const PSI_TOL: f64 = 1e-10;
const DERIV_STEP: f64 = 1e-5;
const CROSSING_STEP: f64 = 1e-4;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub alpha: f64,
    pub equilibrium: Option<State>,
    pub psi: Option<f64>,
    pub psi_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfScanResult {
    pub alpha_star: f64,
    pub psi_at_star: f64,
    pub psi_scale: f64,
    pub equilibrium: State,
    /// Imaginary part of the critical pair.
    pub imag_part_omega0: f64,
    /// Real part of the critical pair at `alpha_star`.
    pub real_part: f64,
    /// `y3 / y1`, which equals `omega0^2` at a crossing.
    pub omega0_sq_ratio: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `A C + B D`.
    pub transversality_value: f64,
    /// `-(A C + B D) / (A^2 + B^2)`.
    pub predicted_speed: f64,
    /// Central difference of the pair's real part in `alpha`.
    pub observed_speed: f64,
    pub eigen_crossing_verified: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HopfScan {
    pub samples: Vec<GridSample>,
    pub points: Vec<HopfScanResult>,
    /// Grid intervals on which no coexistence state was available.
    pub skipped: Vec<(f64, f64)>,
}

pub fn alpha_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect()
}

fn distance(a: &State, b: &State) -> f64 {
    a.to_array().iter().zip(b.to_array()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Coexistence state at `alpha`, continued from `prev` when given.
pub fn track(p: &ModelParams, alpha: f64, prev: Option<&State>) -> Option<Equilibrium> {
    let q = p.with_alpha(alpha);
    if let Some(prev) = prev {
        if let Some(eq) = coexistence_from_seed(&q, *prev) {
            return Some(eq);
        }
        return coexistence_equilibria(&q)
            .into_iter()
            .min_by(|a, b| distance(&a.state, prev).total_cmp(&distance(&b.state, prev)));
    }
    coexistence_equilibria(&q).into_iter().next()
}

fn coefficients_at(p: &ModelParams, alpha: f64, st: &State) -> Result<QuarticCoefficients> {
    quartic_coefficients(&p.with_alpha(alpha), st)
}

fn critical_pair(eigs: &[Complex64]) -> Option<Complex64> {
    eigs.iter().copied().filter(|z| z.im > 0.0).min_by(|a, b| a.re.abs().total_cmp(&b.re.abs()))
}

fn nearest(eigs: &[Complex64], target: Complex64) -> Complex64 {
    eigs.iter().copied().min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm())).unwrap_or(target)
}

fn spectrum_at(p: &ModelParams, alpha: f64, st: &State) -> Result<Vec<Complex64>> {
    eigenvalues(&jacobian(&p.with_alpha(alpha), st)?)
}

fn refine(p: &ModelParams, mut lo: (f64, State, f64), mut hi: (f64, State, f64)) -> Result<Option<(f64, State, QuarticCoefficients)>> {
    let mut best: Option<(f64, State, QuarticCoefficients)> = None;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo.0 + hi.0);
        let Some(eq) = track(p, mid, Some(&lo.1)) else {
            return Ok(best);
        };
        let y = coefficients_at(p, mid, &eq.state)?;
        let psi = y.psi();
        if best.as_ref().is_none_or(|b| psi.abs() < b.2.psi().abs()) {
            best = Some((mid, eq.state, y));
        }
        if psi.abs() <= PSI_TOL * y.psi_scale() || hi.0 - lo.0 <= 4.0 * f64::EPSILON * mid {
            break;
        }
        if psi.signum() == lo.2.signum() {
            lo = (mid, eq.state, psi);
        } else {
            hi = (mid, eq.state, psi);
        }
    }
    Ok(best)
}

fn characterise(p: &ModelParams, alpha: f64, st: State, y: QuarticCoefficients) -> Result<HopfScanResult> {
    let eigs = spectrum_at(p, alpha, &st)?;
    let rho = critical_pair(&eigs).unwrap_or(Complex64::new(f64::NAN, 0.0));
    let (b1, b2) = (rho.re, rho.im);

    let h = DERIV_STEP * alpha;
    let side = |a: f64| -> Result<(State, QuarticCoefficients)> {
        let eq = track(p, a, Some(&st)).ok_or(Error::NoCoexistence { alpha: a })?;
        Ok((eq.state, coefficients_at(p, a, &eq.state)?))
    };
    let (_, yp) = side(alpha + h)?;
    let (_, ym) = side(alpha - h)?;
    let dy: [f64; 4] = std::array::from_fn(|k| (yp.to_array()[k] - ym.to_array()[k]) / (2.0 * h));

    let [y1, y2, y3, _] = y.to_array();
    let re3 = b1.powi(3) - 3.0 * b1 * b2 * b2;
    let im3 = 3.0 * b1 * b1 * b2 - b2.powi(3);
    let re2 = b1 * b1 - b2 * b2;
    let im2 = 2.0 * b1 * b2;
    let a = 4.0 * re3 + 3.0 * y1 * re2 + 2.0 * y2 * b1 + y3;
    let b = 4.0 * im3 + 3.0 * y1 * im2 + 2.0 * y2 * b2;
    let c = dy[0] * re3 + dy[1] * re2 + dy[2] * b1 + dy[3];
    let d = dy[0] * im3 + dy[1] * im2 + dy[2] * b2;
    let transversality_value = a * c + b * d;
    let predicted_speed = -transversality_value / (a * a + b * b);

    let he = CROSSING_STEP * alpha;
    let (sp, _) = side(alpha + he)?;
    let (sm, _) = side(alpha - he)?;
    let rp = nearest(&spectrum_at(p, alpha + he, &sp)?, rho);
    let rm = nearest(&spectrum_at(p, alpha - he, &sm)?, rho);
    let observed_speed = (rp.re - rm.re) / (2.0 * he);
    let eigen_crossing_verified = b2 > 0.0 && rp.im > 0.0 && rm.im > 0.0 && rp.re.signum() != rm.re.signum();

    Ok(HopfScanResult {
        alpha_star: alpha,
        psi_at_star: y.psi(),
        psi_scale: y.psi_scale(),
        equilibrium: st,
        imag_part_omega0: b2,
        real_part: b1,
        omega0_sq_ratio: y3 / y1,
        a,
        b,
        c,
        d,
        transversality_value,
        predicted_speed,
        observed_speed,
        eigen_crossing_verified,
    })
}

/// Scan `Psi` along an attack-rate grid, continuing one coexistence branch,
/// and refine every sign change by bisection.
pub fn hopf_scan(p: &ModelParams, lo: f64, hi: f64, n: usize) -> Result<HopfScan> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::InvalidParams(format!("bad scan range [{lo}, {hi}] with {n} points")));
    }
    let mut out = HopfScan::default();
    let mut prev: Option<State> = None;
    for alpha in alpha_grid(lo, hi, n) {
        let eq = track(p, alpha, prev.as_ref());
        let sample = match eq {
            Some(eq) => {
                let y = coefficients_at(p, alpha, &eq.state)?;
                prev = Some(eq.state);
                GridSample { alpha, equilibrium: Some(eq.state), psi: Some(y.psi()), psi_scale: Some(y.psi_scale()) }
            }
            None => {
                prev = None;
                GridSample { alpha, equilibrium: None, psi: None, psi_scale: None }
            }
        };
        out.samples.push(sample);
    }
    for w in out.samples.windows(2) {
        let (l, r) = (&w[0], &w[1]);
        match (l.equilibrium, l.psi, r.equilibrium, r.psi) {
            (Some(ls), Some(lp), Some(rs), Some(rp)) => {
                if lp == 0.0 {
                    out.points.push(characterise(p, l.alpha, ls, coefficients_at(p, l.alpha, &ls)?)?);
                } else if lp.signum() != rp.signum() && rp != 0.0 {
                    if let Some((a, st, y)) = refine(p, (l.alpha, ls, lp), (r.alpha, rs, rp))? {
                        out.points.push(characterise(p, a, st, y)?);
                    }
                }
            }
            _ => out.skipped.push((l.alpha, r.alpha)),
        }
    }
    Ok(out)
}

use nalgebra::Vector4;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{eval_monic, monic_roots, Poly};
use crate::model::{jacobian, rhs, ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    Axial,
    PestFree,
    HealthyPestFree,
    Coexistence,
}

impl EquilibriumKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Axial => "E0",
            Self::PestFree => "E1",
            Self::HealthyPestFree => "E3",
            Self::Coexistence => "E*",
        }
    }
}

/// Published existence conditions, evaluated but never enforced.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExistenceFlags {
    /// `K - X > 0` for the healthy-pest-free state.
    pub below_capacity: Option<bool>,
    /// `A > (alpha*omega + r*sigma) / (alpha*eta)` for the coexistence state.
    pub awareness_threshold: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub state: State,
    pub residual_norm: f64,
    pub existence: ExistenceFlags,
}

impl Equilibrium {
    fn build(p: &ModelParams, kind: EquilibriumKind, state: State, existence: ExistenceFlags) -> Result<Self> {
        let residual_norm = rhs(p, &state)?.max_norm();
        Ok(Self { kind, state, residual_norm, existence })
    }
}

pub fn residual_tolerance(state: &State) -> f64 {
    1e-9 * (1.0 + state.max_norm())
}

pub fn axial_equilibrium(p: &ModelParams) -> Equilibrium {
    let state = State::new(0.0, 0.0, 0.0, p.omega / p.eta);
    let residual_norm = rhs(p, &state).map(|f| f.max_norm()).unwrap_or(f64::NAN);
    Equilibrium { kind: EquilibriumKind::Axial, state, residual_norm, existence: ExistenceFlags::default() }
}

pub fn pest_free_equilibrium(p: &ModelParams) -> Equilibrium {
    let state = State::new(p.k, 0.0, 0.0, p.omega / p.eta);
    let residual_norm = rhs(p, &state).map(|f| f.max_norm()).unwrap_or(f64::NAN);
    Equilibrium { kind: EquilibriumKind::PestFree, state, residual_norm, existence: ExistenceFlags::default() }
}

/// Audit of the quadratic that would give an equilibrium with `I = 0, S > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonExistenceReport {
    /// `[lambda, gamma + d + lambda, d]`, highest power first.
    pub coefficients: [f64; 3],
    pub roots: [Complex64; 2],
    pub sign_changes: usize,
    pub has_positive_root: bool,
}

pub fn boundary_equilibrium_check(p: &ModelParams) -> NonExistenceReport {
    let c = [p.lambda, p.gamma + p.d + p.lambda, p.d];
    let disc = Complex64::new(c[1] * c[1] - 4.0 * c[0] * c[2], 0.0).sqrt();
    let roots = [(-c[1] + disc) / (2.0 * c[0]), (-c[1] - disc) / (2.0 * c[0])];
    let sign_changes = c.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    let has_positive_root = roots.iter().any(|z| z.im.abs() <= 1e-12 * (1.0 + z.re.abs()) && z.re > 0.0);
    NonExistenceReport { coefficients: c, roots, sign_changes, has_positive_root }
}

/// Monic cubic `X^3 + a1 X^2 + a2 X + a3` whose roots give the crop level of E3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl CubicCoefficients {
    pub fn eval(&self, x: f64) -> f64 {
        eval_monic(&[self.a1, self.a2, self.a3], x)
    }
}

pub fn cubic_coefficients(p: &ModelParams) -> Result<CubicCoefficients> {
    let ModelParams { r, k, alpha, phi, a, m2, d, delta, gamma, sigma, eta, omega, .. } = *p;
    let apm = alpha * phi * m2;
    let den = -apm + d + delta + gamma;
    if den.abs() <= 1e-12 * (apm.abs() + d + delta + gamma) || !den.is_finite() {
        return Err(Error::DegenerateDenominator);
    }
    let ddg = d + delta + gamma;
    let a1 = ((apm - ddg) * k - a * (apm - 2.0 * ddg)) / den;
    let a2 = ((apm - 2.0 * ddg) * k + a * ddg) * a / den
        - k * (den * omega + eta * (-apm + d + delta)) * phi * alpha / (r * sigma * den);
    let a3 = -(k * a * a * r * ddg * sigma + k * phi * a * alpha * (ddg * omega + eta * (d + delta))) / (r * sigma * den);
    let c = CubicCoefficients { a1, a2, a3 };
    if [a1, a2, a3].iter().all(|v| v.is_finite()) {
        Ok(c)
    } else {
        Err(Error::NumericDomain("cubic coefficients"))
    }
}

/// `(I, A)` on the healthy-pest-free branch for a given crop level.
pub fn healthy_branch(p: &ModelParams, x: f64) -> (f64, f64) {
    let i = p.r * (p.a + x) * (p.k - x) / (p.phi * p.alpha * p.k);
    (i, (p.omega + p.sigma * i) / p.eta)
}

pub fn healthy_pest_free_equilibria(p: &ModelParams) -> Result<Vec<Equilibrium>> {
    let cubic = cubic_coefficients(p)?;
    let roots = monic_roots(&[cubic.a1, cubic.a2, cubic.a3])?;
    let mut out = Vec::new();
    for z in roots {
        if z.im.abs() >= 1e-9 * (1.0 + z.re.abs()) {
            continue;
        }
        let mut x = z.re;
        for _ in 0..3 {
            let dp = (3.0 * x + 2.0 * cubic.a1) * x + cubic.a2;
            if dp == 0.0 {
                break;
            }
            x -= cubic.eval(x) / dp;
        }
        if !(x > 0.0 && x < p.k) {
            continue;
        }
        let (i, aw) = healthy_branch(p, x);
        if !(i > 0.0 && aw > 0.0) {
            continue;
        }
        let flags = ExistenceFlags { below_capacity: Some(p.k - x > 0.0), awareness_threshold: None };
        let eq = Equilibrium::build(p, EquilibriumKind::HealthyPestFree, State::new(x, 0.0, i, aw), flags)?;
        if eq.residual_norm <= residual_tolerance(&eq.state) {
            out.push(eq);
        }
    }
    out.sort_by(|a, b| a.state.x.total_cmp(&b.state.x));
    out.dedup_by(|a, b| (a.state.x - b.state.x).abs() < 1e-12);
    Ok(out)
}

/// Closed-form `X*, S*, I*` expressed through `A*`; `None` inside the singular band.
pub fn coexistence_closed_form(p: &ModelParams, aw: f64) -> Option<State> {
    let ModelParams { alpha, m1, lambda, d, gamma, .. } = *p;
    let x = (lambda * aw * aw + (d + lambda + gamma) * aw + d) / (m1 * alpha * (1.0 + aw));
    let (s, i) = coexistence_pests(p, x, aw)?;
    Some(State::new(x, s, i, aw))
}

/// `S*, I*` from `X*, A*`; `None` when `|X + a - phi| <= 1e-10`.
pub fn coexistence_pests(p: &ModelParams, x: f64, aw: f64) -> Option<(f64, f64)> {
    let ModelParams { r, k, alpha, phi, a, sigma, eta, omega, .. } = *p;
    let g = x + a - phi;
    if g.abs() <= 1e-10 {
        return None;
    }
    let den = k * sigma * alpha * g;
    let s = (r * (a + x) * (k - x) * sigma - k * phi * alpha * (aw * eta - omega)) / den;
    let i = (a + x) * (((aw * eta - omega) * alpha - sigma * r) * k + sigma * r * x) / den;
    Some((s, i))
}

pub const NEWTON_MAX_ITER: usize = 100;
pub const NEWTON_STEP_TOL: f64 = 1e-12;
pub const DEDUPE_TOL: f64 = 1e-8;

fn residual(p: &ModelParams, y: &Vector4<f64>) -> Option<(Vector4<f64>, f64)> {
    let f = rhs(p, &State::new(y[0], y[1], y[2], y[3])).ok()?;
    let v = Vector4::from(f.0);
    Some((v, f.max_norm()))
}

/// Damped Newton on the steady-state system; returns the converged point if interior.
pub fn newton_steady_state(p: &ModelParams, seed: State) -> Option<State> {
    let mut y = Vector4::from(seed.to_array());
    let (mut f, mut fnorm) = residual(p, &y)?;
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let j = jacobian(p, &State::new(y[0], y[1], y[2], y[3])).ok()?;
        let step = j.lu().solve(&(-f))?;
        if !step.iter().all(|v| v.is_finite()) {
            return None;
        }
        let scale = 1.0 + y.amax();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = y + step * t;
            if let Some((ft, nt)) = residual(p, &trial) {
                if nt < fnorm {
                    accepted = Some((trial, ft, nt));
                    break;
                }
            }
            t *= 0.5;
        }
        let step_norm = step.amax() * t;
        match accepted {
            Some((trial, ft, nt)) => {
                y = trial;
                f = ft;
                fnorm = nt;
            }
            None => {
                // No decrease possible: already at rounding level or stuck.
                converged = fnorm <= 1e-14 * scale;
                break;
            }
        }
        if step_norm < NEWTON_STEP_TOL * scale {
            converged = true;
            break;
        }
    }
    let st = State::new(y[0], y[1], y[2], y[3]);
    if !converged || fnorm > residual_tolerance(&st) {
        return None;
    }
    let floor = DEDUPE_TOL * (1.0 + st.max_norm());
    if st.to_array().iter().all(|v| *v > floor) {
        Some(st)
    } else {
        None
    }
}

fn closed_form_consistent(p: &ModelParams, st: &State) -> bool {
    match coexistence_closed_form(p, st.aw) {
        Some(cf) => cf
            .to_array()
            .iter()
            .zip(st.to_array())
            .all(|(c, v)| (c - v).abs() <= 1e-6 * (1.0 + v.abs())),
        None => false,
    }
}

/// Validate and wrap a Newton point as a coexistence equilibrium.
pub fn coexistence_from_state(p: &ModelParams, st: State) -> Option<Equilibrium> {
    if (st.x + p.a - p.phi).abs() <= 1e-10 || !closed_form_consistent(p, &st) {
        return None;
    }
    let threshold = (p.alpha * p.omega + p.r * p.sigma) / (p.alpha * p.eta);
    let flags = ExistenceFlags { below_capacity: None, awareness_threshold: Some(st.aw > threshold) };
    Equilibrium::build(p, EquilibriumKind::Coexistence, st, flags).ok()
}

/// Newton from one seed followed by the same validation as the full search.
pub fn coexistence_from_seed(p: &ModelParams, seed: State) -> Option<Equilibrium> {
    newton_steady_state(p, seed).and_then(|st| coexistence_from_state(p, st))
}

pub fn newton_seeds(p: &ModelParams) -> Vec<State> {
    let base = p.omega / p.eta;
    let mut seeds = Vec::with_capacity(90);
    for xi in 1..=9 {
        let x = 0.1 * xi as f64 * p.k;
        for ai in 1..=10 {
            let aw = 0.5 * ai as f64 * base;
            let floor = 1e-3 * p.k;
            let (s, i) = coexistence_pests(p, x, aw).unwrap_or((floor, floor));
            let fix = |v: f64| if v.is_finite() && v > 0.0 { v } else { floor };
            seeds.push(State::new(x, fix(s), fix(i), aw));
        }
    }
    seeds
}

fn lexi(a: &State, b: &State) -> std::cmp::Ordering {
    a.to_array()
        .iter()
        .zip(b.to_array())
        .map(|(x, y)| x.total_cmp(&y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

pub fn coexistence_equilibria(p: &ModelParams) -> Vec<Equilibrium> {
    let mut found: Vec<Equilibrium> = newton_seeds(p)
        .par_iter()
        .filter_map(|seed| coexistence_from_seed(p, *seed))
        .collect();
    found.sort_by(|a, b| lexi(&a.state, &b.state));
    let mut out: Vec<Equilibrium> = Vec::new();
    for eq in found {
        let dup = out.iter().any(|o| {
            o.state.to_array().iter().zip(eq.state.to_array()).all(|(u, v)| (u - v).abs() < DEDUPE_TOL)
        });
        if !dup {
            out.push(eq);
        }
    }
    out
}

/// Monic sextic in `A`: `A^6 + a[0] A^5 + ... + a[5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SexticCoefficients {
    pub a: [f64; 6],
}

impl SexticCoefficients {
    pub fn eval(&self, x: f64) -> f64 {
        eval_monic(&self.a, x)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.a.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
    }
}

/// The published closed-form sextic coefficients, transcribed as printed.
pub fn sextic_coefficients(p: &ModelParams) -> Result<SexticCoefficients> {
    let ModelParams { r, k, alpha: al, phi: ph, a, m1, m2, lambda: l, d, delta: de, gamma: g, sigma: si, eta: et, omega: om } = *p;
    let (l2, l3) = (l * l, l * l * l);
    let (al2, al3) = (al * al, al * al * al);
    let a1 = (3.0 * l2 * r * si - r * si * (((k - a) * m1 + m2 * ph) * al - 3.0 * d - de - 3.0 * g) * l) / (l2 * r * si)
        + m1 * et * (ph * (m1 - m2) * al + d + de + g) * al2 / (l2 * r * si);
    let a2 = (3.0 * si * l3 * r - 3.0 * si * r * (((k - a) * m1 + m2 * ph) * al - 3.0 * d - de - 2.0 * g) * l2) / (si * l3 * r)
        - m1 * k
            * (ph * (m1 - m2) * (om - 3.0 * et) * al + om * (d + de + g) + (-3.0 * d - 3.0 * de - 2.0 * g) * et
                + si * r * (m1 * a - m2 * ph))
            * al2
            / (l2 * r * si)
        + ((-2.0 * (k - a) * (d + de / 2.0 + g) * m1 - 2.0 * m2 * ph * (d + g)) * al
            + 3.0 * (d + g) * (d + 2.0 / 3.0 * de + g))
            / l2
        + k * et * ((a * (d + de + g) * m1 - m2 * ph * (d + g)) * al + (d + g) * (d + de + g)) * m1 * al2 / (si * l3 * r);
    let sl3 = (si * l).powi(3);
    let a3 = -3.0 * (m1 * m1 * k * al3 * (ph * (om - et) * l + a / 3.0 * (om * (d + de + g) - 3.0 * et * (d + de + 2.0 / 3.0 * g))))
        / (si * l3 * r)
        + 3.0 * (m1 * k * al3 * ph * ((l + d / 3.0 + g / 3.0) * om - (l + d + 2.0 / 3.0 * g) * et) * m2) / (si * l3 * r)
        + 3.0
            * (m1
                * k
                * (si * a * r * (l + d / 3.0 + de / 3.0 + g / 3.0) * m1 - (l + d / 3.0 + g / 3.0) * ph * m2 * r * si
                    + (om / 3.0 - et / 3.0) * g * g)
                * al2)
            / (sl3 * r)
        - 3.0
            * (m1
                * k
                * (((2.0 / 3.0 * om - 4.0 / 3.0 * et) * d + (2.0 / 3.0 * om - et / 3.0) * l + de / 3.0 * (om - 2.0 * et)) * g
                    + (om / 3.0 - et) * d)
                * al2)
            / (sl3 * r)
        + (-(k - a) * (d * d + (de + 2.0 * g + 6.0 * l) * d + g * (de + 3.0 * g + 4.0 * l)) * m1
            - ph * (d * d + 6.0 * l * d + 3.0 * l2) * m2)
            / (3.0 * l3 * r)
        + (l3 + (9.0 * d + 3.0 * de + 3.0 * g) * l2
            + (3.0 * g * g + (12.0 * d + 4.0 * de) * g + 9.0 * d * d + 6.0 * d * de) * l
            + (d + g).powi(2) * (d + de + g))
            / l3;
    let a4 = (((a * (om - et) * d + ph * (om - et / 3.0) * l + a * g + de * (om - et)) * m1
        - (om - et / 3.0 + l + 2.0 / 3.0 * om * g) * ph * m2)
        * k
        * al3)
        / (si * l3 * r)
        - 3.0
            * (m1
                * k
                * (si * a * r * (l + d + de) * m1 - (l + d + 2.0 / 3.0 * g) * ph * m2 * r * si + de * (om - et)
                    + de * (om - et / 3.0) * l)
                * al2)
            / (si * l3 * r)
        - 3.0
            * (((k - a) * (6.0 * l + 3.0 * de + 4.0 * g) * d + (l2 + (3.0 * de + 2.0 * g) * l + 2.0 * de * g + g * g) * m1
                + ph * (3.0 * d * d + (6.0 * l + 4.0 * g) * d) * m2)
                * al)
            / l3
        - 9.0
            * (si * (d.powi(3) + (3.0 * l + de + 2.0 * g) * d * d
                + (l2 + (2.0 * de + 2.0 * g) * l + 4.0 / 3.0 * de * g + g * g) * d
                + de / 3.0 * (l + g).powi(2)))
            / l3;
    let a5 = -(k
        * (((l * ph + 3.0 * (d + de + g / 3.0) * a) * om - a * et * (d + de)) * m1 - m2 * ((l + 3.0 * d + g) * om - d * et) * ph)
        * al3
        * m1)
        / (si * l3 * r)
        - (m1
            * (si * a * r * (l + 3.0 * de + g) * m1 - m2 * r * ph * (l + 3.0 * d) * si
                + (de * (3.0 * om - et) + om * (l + 2.0 * g)) * d)
            * k
            * al2)
            / (si * l3 * r)
        - 2.0
            * (((k - a) * (1.5 * d * d + (l + 1.5 * de + g) * d + 0.5 * de * (l + g)) * m1 + m2 * ph * d * (l + 1.5 * d + g))
                * al)
            / l3
        + 3.0 * ((d * d + (l + de + g) * d + 2.0 / 3.0 * de * (l + g)) * d) / l3;
    let common = k * al2 * om * m1 + k * al * r * si * m1 - d * r * si;
    let a6 = m2 * d * al * common * ph / (si * l3 * r) - ((a * d * m1 + a * de * m1) * al + d * (d + de)) * common / (si * l3 * r);
    let c = SexticCoefficients { a: [a1, a2, a3, a4, a5, a6] };
    if c.a.iter().all(|v| v.is_finite()) {
        Ok(c)
    } else {
        Err(Error::NumericDomain("sextic coefficients"))
    }
}

/// Sextic obtained by substituting the closed forms into the infected-pest equation
/// and clearing denominators with exact polynomial arithmetic.
pub fn eliminated_sextic(p: &ModelParams) -> Result<SexticCoefficients> {
    let ModelParams { r, k, alpha, phi, a, m1, m2, lambda, d, delta, gamma, sigma, eta, omega } = *p;
    let one_a = Poly::new(&[1.0, 1.0]);
    let aw = Poly::new(&[0.0, 1.0]);
    let n = Poly::new(&[d, d + lambda + gamma, lambda]);
    let dd = one_a.scale(m1 * alpha);
    let eta_a = Poly::new(&[-omega, eta]);
    let ip = eta_a.scale(alpha).add(&Poly::constant(-sigma * r)).scale(k).mul(&dd).add(&n.scale(sigma * r));
    let ad_n = dd.scale(a).add(&n);
    let sn = ad_n
        .mul(&dd.scale(k).sub(&n))
        .scale(r * sigma)
        .sub(&eta_a.mul(&dd).mul(&dd).scale(k * phi * alpha));
    let inn = ad_n.mul(&ip);
    let eq = n
        .mul(&ip)
        .mul(&one_a)
        .scale(m2 * phi * alpha)
        .add(&aw.mul(&sn).mul(&one_a).scale(lambda))
        .sub(&inn.mul(&one_a).scale(d + delta))
        .sub(&aw.mul(&inn).scale(gamma));
    if eq.degree() != 6 {
        return Err(Error::NumericDomain("eliminated sextic degree"));
    }
    let tail = eq.monic_tail();
    let mut c = [0.0; 6];
    c.copy_from_slice(&tail);
    if c.iter().all(|v| v.is_finite()) {
        Ok(SexticCoefficients { a: c })
    } else {
        Err(Error::NumericDomain("eliminated sextic"))
    }
}

/// Every equilibrium the crate can locate for `p`, in kind order.
pub fn all_equilibria(p: &ModelParams) -> Result<Vec<Equilibrium>> {
    let mut out = vec![axial_equilibrium(p), pest_free_equilibrium(p)];
    match healthy_pest_free_equilibria(p) {
        Ok(v) => out.extend(v),
        Err(Error::DegenerateDenominator) => {}
        Err(e) => return Err(e),
    }
    out.extend(coexistence_equilibria(p));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_roots_for_printed_rates() {
        let rep = boundary_equilibrium_check(&ModelParams::published());
        for (c, w) in rep.coefficients.iter().zip([0.025, 0.06, 0.01]) {
            assert!((c - w).abs() < 1e-15);
        }
        assert_eq!(rep.sign_changes, 0);
        assert!(!rep.has_positive_root);
        // Vieta: sum = -0.06/0.025, product = 0.01/0.025
        let sum = rep.roots[0] + rep.roots[1];
        let prod = rep.roots[0] * rep.roots[1];
        assert!((sum.re + 2.4).abs() < 1e-12 && (prod.re - 0.4).abs() < 1e-12);
        assert!(rep.roots.iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn eliminated_sextic_published() {
        let c = eliminated_sextic(&ModelParams::published()).unwrap();
        let want = [12.46, 42.7416, 53.92288, 20.55584, -2.21056, -1.12512];
        for (g, w) in c.a.iter().zip(want) {
            assert!((g - w).abs() < 1e-9 * w.abs().max(1.0), "{g} vs {w}");
        }
    }

    #[test]
    fn printed_sextic_agrees_on_outer_coefficients() {
        let p = ModelParams::published();
        let printed = sextic_coefficients(&p).unwrap();
        let exact = eliminated_sextic(&p).unwrap();
        for idx in [0, 1, 5] {
            assert!((printed.a[idx] - exact.a[idx]).abs() < 1e-9 * exact.a[idx].abs().max(1.0));
        }
    }

    #[test]
    fn published_has_one_coexistence_state() {
        let p = ModelParams::published();
        let eqs = coexistence_equilibria(&p);
        assert_eq!(eqs.len(), 1);
        let st = eqs[0].state;
        let ex = eliminated_sextic(&p).unwrap();
        assert!(ex.eval(st.aw).abs() <= 1e-9 * ex.max_magnitude());
    }
}

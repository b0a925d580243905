use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::equilibria::{coexistence_equilibria, Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, max_real_part};
use crate::model::{jacobian, ModelParams, State};

/// Relative width of the band in which a sign is treated as undecided.
pub const MARGINAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
            Self::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Pos,
    Neg,
    Zero,
}

fn sign_in_band(v: f64, scale: f64) -> Sign {
    if v.abs() <= MARGINAL_BAND * scale {
        Sign::Zero
    } else if v > 0.0 {
        Sign::Pos
    } else {
        Sign::Neg
    }
}

/// Combines "must be positive" conditions into a verdict.
fn verdict_from(signs: &[Sign]) -> Verdict {
    if signs.contains(&Sign::Neg) {
        Verdict::Unstable
    } else if signs.contains(&Sign::Zero) {
        Verdict::Marginal
    } else {
        Verdict::Stable
    }
}

/// Verdict from the spectrum, with a band scaled by the matrix norm.
pub fn eigen_verdict(j: &Matrix4<f64>, eigs: &[Complex64]) -> Verdict {
    let scale = j.amax().max(f64::MIN_POSITIVE);
    match sign_in_band(-max_real_part(eigs), 0.1 * scale) {
        Sign::Pos => Verdict::Stable,
        Sign::Neg => Verdict::Unstable,
        Sign::Zero => Verdict::Marginal,
    }
}

fn cross_check(what: &str, formula: Verdict, numeric: Verdict) -> Result<()> {
    if formula != Verdict::Marginal && numeric != Verdict::Marginal && formula != numeric {
        return Err(Error::Consistency(format!(
            "{what}: closed-form verdict {} but eigenvalues say {}",
            formula.label(),
            numeric.label()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPair {
    pub r0: f64,
    pub r1: f64,
}

pub fn thresholds(p: &ModelParams) -> ThresholdPair {
    let ModelParams { k, alpha, phi, a, m1, m2, lambda, d, delta, gamma, eta, omega, .. } = *p;
    let eo = eta + omega;
    let r0 = m1 * alpha * k * eta * eo / (lambda * omega * eo + eta * gamma * omega + d * eta * eo);
    let r1 = m2 * phi * alpha * k * eo / ((a + k) * (d + delta) * eo + (a + k) * gamma * omega);
    ThresholdPair { r0, r1 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub witness: Option<Complex64>,
    pub eigenvalues: Vec<Complex64>,
}

/// Closed-form spectrum at the axial state.
pub fn e0_closed_form_eigenvalues(p: &ModelParams) -> [f64; 4] {
    let g = p.gamma * p.omega / (p.eta + p.omega);
    [p.r, -p.eta, -(p.lambda * p.omega / p.eta + p.d + g), -(p.d + p.delta + g)]
}

pub fn classify_e0(p: &ModelParams) -> Result<Classification> {
    let st = State::new(0.0, 0.0, 0.0, p.omega / p.eta);
    let j = jacobian(p, &st)?;
    let eigenvalues = eigenvalues(&j)?;
    cross_check("E0", Verdict::Unstable, eigen_verdict(&j, &eigenvalues))?;
    Ok(Classification { verdict: Verdict::Unstable, witness: Some(Complex64::new(p.r, 0.0)), eigenvalues })
}

pub fn classify_e1(p: &ModelParams) -> Result<Classification> {
    let t = thresholds(p);
    let below = |r: f64| sign_in_band(1.0 - r, 1.0);
    let verdict = verdict_from(&[below(t.r0), below(t.r1)]);
    let st = State::new(p.k, 0.0, 0.0, p.omega / p.eta);
    let j = jacobian(p, &st)?;
    let eigenvalues = eigenvalues(&j)?;
    cross_check("E1", verdict, eigen_verdict(&j, &eigenvalues))?;
    let witness = eigenvalues.first().copied().filter(|z| z.re > 0.0);
    Ok(Classification { verdict, witness, eigenvalues })
}

/// Diagonal Jacobian entries used by the printed stability conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalTerms {
    pub f11: f64,
    pub f22: f64,
    pub f33: f64,
}

fn diagonal_terms(j: &Matrix4<f64>) -> DiagonalTerms {
    DiagonalTerms { f11: j[(0, 0)], f22: j[(1, 1)], f33: j[(2, 2)] }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicConditions {
    pub f22_negative: bool,
    pub c1_positive: bool,
    pub c3_positive: bool,
    pub hurwitz_positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubicStabilityReport {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub terms: DiagonalTerms,
    pub conditions: CubicConditions,
    pub verdict: Verdict,
    /// C1..C3 exactly as typeset, kept for the deviation report.
    pub printed: [f64; 3],
    pub eigenvalues: Vec<Complex64>,
}

/// Coefficients of `rho^3 + C1 rho^2 + C2 rho + C3` after factoring out `rho - F22`.
pub fn cubic_stability_coefficients(p: &ModelParams, st: &State) -> Result<([f64; 3], [f64; 3], DiagonalTerms)> {
    let ModelParams { alpha, phi, a, m2, gamma, sigma, eta, .. } = *p;
    let State { x, i, aw, .. } = *st;
    let j = jacobian(p, st)?;
    let t = diagonal_terms(&j);
    let (f11, f33) = (t.f11, t.f33);
    let oa2 = (1.0 + aw).powi(2);
    let ax3 = (a + x).powi(3);
    let pa2 = phi * phi * alpha * alpha;
    let c1 = -f11 - f33 + eta;
    let c2 = (f11 - eta) * f33 - f11 * eta + (gamma * sigma * ax3 + m2 * pa2 * a * x * oa2) * i / (ax3 * oa2);
    let c3 = eta * f11 * f33 + (i * x * a * pa2 * eta * m2 * oa2 - sigma * i * gamma * ax3 * f11) / (ax3 * oa2);
    let bad = x * x * x + 3.0 * x * x * a + 3.0 * a;
    let bad_den = (x * x * x + a) * oa2;
    let c2p = (f11 - eta) * f33 - f11 * eta + (gamma * sigma * bad + m2 * pa2 * oa2) * i / bad_den;
    let c3p = eta * f11 * f33 + (i * x * a * pa2 * eta * m2 * oa2 - sigma * i * gamma * ax3 * f11) / bad_den;
    let all = [c1, c2, c3, c2p, c3p];
    if !all.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericDomain("cubic stability coefficients"));
    }
    Ok(([c1, c2, c3], [c1, c2p, c3p], t))
}

pub fn classify_e3(p: &ModelParams, eq: &Equilibrium) -> Result<CubicStabilityReport> {
    if eq.kind != EquilibriumKind::HealthyPestFree {
        return Err(Error::WrongKind { expected: "healthy-pest-free" });
    }
    let ([c1, c2, c3], printed, terms) = cubic_stability_coefficients(p, &eq.state)?;
    let j = jacobian(p, &eq.state)?;
    let js = j.amax();
    let hurwitz = c1 * c2 - c3;
    let signs = [
        sign_in_band(-terms.f22, js),
        sign_in_band(c1, 3.0 * js),
        sign_in_band(c3, (3.0 * js).powi(3)),
        sign_in_band(hurwitz, (c1 * c2).abs() + c3.abs()),
    ];
    let verdict = verdict_from(&signs);
    let conditions = CubicConditions {
        f22_negative: signs[0] == Sign::Pos,
        c1_positive: signs[1] == Sign::Pos,
        c3_positive: signs[2] == Sign::Pos,
        hurwitz_positive: signs[3] == Sign::Pos,
    };
    let eigenvalues = eigenvalues(&j)?;
    cross_check("E3", verdict, eigen_verdict(&j, &eigenvalues))?;
    Ok(CubicStabilityReport { c1, c2, c3, terms, conditions, verdict, printed, eigenvalues })
}

/// `rho^4 + y1 rho^3 + y2 rho^2 + y3 rho + y4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub y4: f64,
}

impl QuarticCoefficients {
    pub fn to_array(self) -> [f64; 4] {
        [self.y1, self.y2, self.y3, self.y4]
    }

    fn from_array(v: [f64; 4]) -> Result<Self> {
        if v.iter().all(|c| c.is_finite()) {
            Ok(Self { y1: v[0], y2: v[1], y3: v[2], y4: v[3] })
        } else {
            Err(Error::NumericDomain("quartic coefficients"))
        }
    }

    /// `y1 y2 y3 - y3^2 - y4 y1^2`.
    pub fn psi(&self) -> f64 {
        self.y1 * self.y2 * self.y3 - self.y3 * self.y3 - self.y4 * self.y1 * self.y1
    }

    /// Magnitude of the terms in [`Self::psi`], for relative comparisons.
    pub fn psi_scale(&self) -> f64 {
        (self.y1 * self.y2 * self.y3).abs() + self.y3 * self.y3 + (self.y4 * self.y1 * self.y1).abs()
    }
}

/// Characteristic coefficients at the coexistence state from the Jacobian entries,
/// using the sparsity pattern of the model (`J14 = J23 = J41 = 0`).
pub fn quartic_coefficients(p: &ModelParams, st: &State) -> Result<QuarticCoefficients> {
    let j = jacobian(p, st)?;
    let (f11, f22, f33, eta, sigma) = (j[(0, 0)], j[(1, 1)], j[(2, 2)], p.eta, p.sigma);
    let (j12, j13, j21, j24, j31, j32, j34) = (j[(0, 1)], j[(0, 2)], j[(1, 0)], j[(1, 3)], j[(2, 0)], j[(2, 1)], j[(2, 3)]);
    let y1 = -f11 - f22 - f33 + eta;
    let y2 = f11 * (f22 + f33 - eta) + f22 * (f33 - eta) - f33 * eta - j12 * j21 - j13 * j31 - sigma * j24 - sigma * j34;
    let y3 = f11 * (-f22 * f33 + f22 * eta + f33 * eta + sigma * j24 + sigma * j34)
        + f22 * (f33 * eta + j13 * j31 + sigma * j34)
        + f33 * (j12 * j21 + sigma * j24)
        - eta * j12 * j21
        - eta * j13 * j31
        - j13 * j21 * j32
        - sigma * j24 * j32;
    let y4 = f11 * (-f22 * f33 * eta - sigma * f22 * j34 - sigma * f33 * j24 + sigma * j24 * j32)
        + eta * f22 * j13 * j31
        + eta * f33 * j12 * j21
        - eta * j13 * j21 * j32
        + sigma * j12 * j21 * j34
        - sigma * j12 * j24 * j31
        - sigma * j13 * j21 * j34
        + sigma * j13 * j24 * j31;
    QuarticCoefficients::from_array([y1, y2, y3, y4])
}

/// The coefficient formulas exactly as typeset, kept for the deviation report.
pub fn quartic_coefficients_verbatim(p: &ModelParams, st: &State) -> Result<QuarticCoefficients> {
    let ModelParams { r, k, alpha: al, phi: ph, a, m1, m2, lambda: l, d, delta: de, gamma: g, sigma: si, eta: et, .. } = *p;
    let State { x, s, i, aw } = *st;
    let oa2 = (1.0 + aw).powi(2);
    let xa = x + a;
    let xa3 = xa.powi(3);
    let al2 = al * al;
    let f11 = r * (1.0 - 2.0 * x / k) - al * s - ph * al * a * i / (xa * xa);
    let f22 = m1 * al * x - l * aw - d - g * aw / (1.0 + aw);
    let f33 = m2 * ph * al * x / xa - d - de - g * aw / (1.0 + aw);
    let infected = m2 * ph * ph * al2 * a * i * x / xa3;
    let ls_g = l * s + g * s / oa2;
    let y1 = -(f11 + f22 + f33) + et;
    let y2 = (f22 + f33 - et) * f11 + (f33 - et) * f22 - et * f33 + s * x * al2 * m1 - g * (i + s) * si / (oa2 * xa) - infected;
    let y3 = ((-f33 + et) * f22 + et * f33 + g * (i + s) * si / oa2) * f11
        + (et * f33 + (-l * s + g * i / oa2) * si + infected) * f22
        + (-s * x * al2 * m1 + si * ls_g) * f33
        + s * al2 * (et + aw * l * ph / xa) * x * m1
        - aw * ls_g * si * l
        - infected * et;
    let y4 = ((l * s - g * i / oa2) * si - et * f33) * f22 - si * ls_g * f33 + aw * ls_g * si * l * f11
        + al2 * ph * ph * et * x * f22 * m2 * a * i / xa3
        - s * x * al2 * et * m1 * f33
        - (xa - ph) * m2 * i * si * a * al2 * (l * oa2 + g) * ph * x * s / (oa2 * xa3)
        + ((s * (xa - ph) * si + aw * et * ph) * oa2 * l - i * g * si * (xa - ph)) * s * x * al2 * m1 / (oa2 * xa);
    QuarticCoefficients::from_array([y1, y2, y3, y4])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticConditions {
    pub y1_positive: bool,
    pub y4_positive: bool,
    pub second_positive: bool,
    pub psi_positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarticStabilityReport {
    pub coefficients: QuarticCoefficients,
    pub printed: QuarticCoefficients,
    pub psi: f64,
    pub psi_scale: f64,
    pub conditions: QuarticConditions,
    pub verdict: Verdict,
    pub eigenvalues: Vec<Complex64>,
}

pub fn classify_estar(p: &ModelParams, eq: &Equilibrium) -> Result<QuarticStabilityReport> {
    if eq.kind != EquilibriumKind::Coexistence {
        return Err(Error::WrongKind { expected: "coexistence" });
    }
    let y = quartic_coefficients(p, &eq.state)?;
    let printed = quartic_coefficients_verbatim(p, &eq.state)?;
    let j = jacobian(p, &eq.state)?;
    let js = 4.0 * j.amax();
    let second = y.y1 * y.y2 - y.y3;
    let psi = y.psi();
    let psi_scale = y.psi_scale();
    let signs = [
        sign_in_band(y.y1, js),
        sign_in_band(y.y4, js.powi(4)),
        sign_in_band(second, (y.y1 * y.y2).abs() + y.y3.abs()),
        sign_in_band(psi, psi_scale),
    ];
    let verdict = verdict_from(&signs);
    let conditions = QuarticConditions {
        y1_positive: signs[0] == Sign::Pos,
        y4_positive: signs[1] == Sign::Pos,
        second_positive: signs[2] == Sign::Pos,
        psi_positive: signs[3] == Sign::Pos,
    };
    let eigenvalues = eigenvalues(&j)?;
    cross_check("E*", verdict, eigen_verdict(&j, &eigenvalues))?;
    Ok(QuarticStabilityReport { coefficients: y, printed, psi, psi_scale, conditions, verdict, eigenvalues })
}

/// `Psi` at the first coexistence state found for the given attack rate.
pub fn psi(p: &ModelParams, alpha: f64) -> Result<f64> {
    let q = p.with_alpha(alpha);
    let eq = coexistence_equilibria(&q).into_iter().next().ok_or(Error::NoCoexistence { alpha })?;
    Ok(quartic_coefficients(&q, &eq.state)?.psi())
}

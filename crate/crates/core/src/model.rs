use nalgebra::Matrix4;

use crate::error::{Error, Result};

/// Biological parameters of the crop-pest-awareness system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub r: f64,
    pub k: f64,
    pub alpha: f64,
    pub phi: f64,
    pub a: f64,
    pub m1: f64,
    pub m2: f64,
    pub lambda: f64,
    pub d: f64,
    pub delta: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub eta: f64,
    pub omega: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::published()
    }
}

impl ModelParams {
    /// Config key names, in the order used by `get`/`set`.
    pub const NAMES: [&'static str; 14] = [
        "r", "K", "alpha", "phi", "a", "m1", "m2", "lambda", "d", "delta", "gamma", "sigma",
        "eta", "omega",
    ];

    /// Published parameter table, with `phi = 0.5` filled in since the table omits it.
    pub fn published() -> Self {
        Self {
            r: 0.05,
            k: 1.0,
            alpha: 0.025,
            phi: 0.5,
            a: 0.2,
            m1: 0.8,
            m2: 0.6,
            lambda: 0.025,
            d: 0.01,
            delta: 0.1,
            gamma: 0.025,
            sigma: 0.015,
            eta: 0.015,
            omega: 0.003,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "r" => self.r,
            "K" => self.k,
            "alpha" => self.alpha,
            "phi" => self.phi,
            "a" => self.a,
            "m1" => self.m1,
            "m2" => self.m2,
            "lambda" => self.lambda,
            "d" => self.d,
            "delta" => self.delta,
            "gamma" => self.gamma,
            "sigma" => self.sigma,
            "eta" => self.eta,
            "omega" => self.omega,
            _ => return None,
        })
    }

    /// Returns `false` for an unknown name.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "r" => &mut self.r,
            "K" => &mut self.k,
            "alpha" => &mut self.alpha,
            "phi" => &mut self.phi,
            "a" => &mut self.a,
            "m1" => &mut self.m1,
            "m2" => &mut self.m2,
            "lambda" => &mut self.lambda,
            "d" => &mut self.d,
            "delta" => &mut self.delta,
            "gamma" => &mut self.gamma,
            "sigma" => &mut self.sigma,
            "eta" => &mut self.eta,
            "omega" => &mut self.omega,
            _ => return false,
        };
        *slot = value;
        true
    }

    pub fn validate(&self) -> Result<()> {
        for name in Self::NAMES {
            let v = self.get(name).unwrap_or(f64::NAN);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.m1 <= self.m2 {
            return Err(Error::InvalidParams(format!(
                "m1 must exceed m2 (m1 = {}, m2 = {})",
                self.m1, self.m2
            )));
        }
        if self.phi >= 1.0 {
            return Err(Error::InvalidParams(format!("phi must be below 1, got {}", self.phi)));
        }
        Ok(())
    }

    /// Awareness level with no pests, `omega / eta`.
    pub fn baseline_awareness(&self) -> f64 {
        self.omega / self.eta
    }
}

/// Crop biomass, susceptible pests, infected pests, awareness.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub x: f64,
    pub s: f64,
    pub i: f64,
    pub aw: f64,
}

impl State {
    pub const fn new(x: f64, s: f64, i: f64, aw: f64) -> Self {
        Self { x, s, i, aw }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.s, self.i, self.aw]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn max_norm(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Time derivative of a [`State`]; components may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative(pub [f64; 4]);

impl StateDerivative {
    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Chemical pesticide, bio-pesticide and advertisement effort.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlTriple {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

impl ControlTriple {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const UNIT: Self = Self::new(1.0, 1.0, 1.0);

    pub const fn new(u1: f64, u2: f64, u3: f64) -> Self {
        Self { u1, u2, u3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u1, self.u2, self.u3]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn clamped(self) -> Self {
        Self::new(self.u1.clamp(0.0, 1.0), self.u2.clamp(0.0, 1.0), self.u3.clamp(0.0, 1.0))
    }

    pub fn is_admissible(&self) -> bool {
        self.to_array().iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(
            self.u1 + (other.u1 - self.u1) * t,
            self.u2 + (other.u2 - self.u2) * t,
            self.u3 + (other.u3 - self.u3) * t,
        )
    }
}

/// Unchecked controlled vector field; the integrators call this directly.
#[inline]
pub fn field(p: &ModelParams, y: &[f64; 4], u: &ControlTriple) -> [f64; 4] {
    let [x, s, i, aw] = *y;
    let attack = p.alpha * x * s;
    let attack_inf = p.phi * p.alpha * x * i / (p.a + x);
    let sat = aw / (1.0 + aw);
    [
        p.r * x * (1.0 - x / p.k) - attack - attack_inf,
        p.m1 * attack - u.u2 * p.lambda * aw * s - p.d * s - u.u1 * p.gamma * s * sat,
        p.m2 * attack_inf + u.u2 * p.lambda * aw * s - (p.d + p.delta) * i - u.u1 * p.gamma * i * sat,
        u.u3 * p.omega + p.sigma * (s + i) - p.eta * aw,
    ]
}

fn checked(v: [f64; 4]) -> Result<StateDerivative> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(StateDerivative(v))
    } else {
        Err(Error::NumericDomain("rhs"))
    }
}

pub fn rhs(p: &ModelParams, s: &State) -> Result<StateDerivative> {
    checked(field(p, &s.to_array(), &ControlTriple::UNIT))
}

pub fn rhs_controlled(p: &ModelParams, s: &State, u: &ControlTriple) -> Result<StateDerivative> {
    checked(field(p, &s.to_array(), u))
}

/// Analytic Jacobian of [`rhs`].
pub fn jacobian(p: &ModelParams, st: &State) -> Result<Matrix4<f64>> {
    let State { x, s, i, aw } = *st;
    let ax = p.a + x;
    let oa = 1.0 + aw;
    if ax == 0.0 {
        return Err(Error::Singularity("a + X = 0"));
    }
    if oa == 0.0 {
        return Err(Error::Singularity("1 + A = 0"));
    }
    let pa = p.phi * p.alpha;
    let sat = aw / oa;
    let dsat = 1.0 / (oa * oa);
    #[rustfmt::skip]
    let j = Matrix4::new(
        p.r * (1.0 - 2.0 * x / p.k) - p.alpha * s - pa * p.a * i / (ax * ax),
        -p.alpha * x,
        -pa * x / ax,
        0.0,

        p.m1 * p.alpha * s,
        p.m1 * p.alpha * x - p.lambda * aw - p.d - p.gamma * sat,
        0.0,
        -p.lambda * s - p.gamma * s * dsat,

        p.m2 * pa * p.a * i / (ax * ax),
        p.lambda * aw,
        p.m2 * pa * x / ax - p.d - p.delta - p.gamma * sat,
        p.lambda * s - p.gamma * i * dsat,

        0.0,
        p.sigma,
        p.sigma,
        -p.eta,
    );
    if j.iter().all(|v| v.is_finite()) {
        Ok(j)
    } else {
        Err(Error::NumericDomain("jacobian"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e0_and_e1_are_fixed_points() {
        let p = ModelParams::published();
        for st in [State::new(0.0, 0.0, 0.0, 0.2), State::new(1.0, 0.0, 0.0, 0.2)] {
            assert!(rhs(&p, &st).unwrap().max_norm() < 1e-15);
        }
    }

    #[test]
    fn zero_controls_leave_only_growth_and_mortality() {
        let p = ModelParams::published();
        let st = State::new(0.3, 0.2, 0.1, 0.7);
        let f = rhs_controlled(&p, &st, &ControlTriple::ZERO).unwrap();
        assert!((f.0[1] - (p.m1 * p.alpha * 0.3 * 0.2 - p.d * 0.2)).abs() < 1e-18);
    }

    #[test]
    fn hand_evaluated_initial_state() {
        let p = ModelParams::published();
        let f = rhs(&p, &State::new(0.2, 0.07, 0.05, 0.5)).unwrap().0;
        // X' = 0.05*0.2*0.8 - 0.025*0.2*0.07 - 0.5*0.025*0.2*0.05/0.4
        let dx = 0.008 - 0.00035 - 0.0003125;
        // S' = 0.8*0.00035 - 0.025*0.5*0.07 - 0.01*0.07 - 0.025*0.07*(1/3)
        let ds = 0.00028 - 0.000875 - 0.0007 - 0.025 * 0.07 / 3.0;
        // I' = 0.6*0.0003125 + 0.000875 - 0.11*0.05 - 0.025*0.05/3
        let di = 0.0001875 + 0.000875 - 0.0055 - 0.025 * 0.05 / 3.0;
        // A' = 0.003 + 0.015*0.12 - 0.015*0.5
        let da = 0.003 + 0.0018 - 0.0075;
        for (got, want) in f.iter().zip([dx, ds, di, da]) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn jacobian_at_e0_has_closed_form_diagonal() {
        let p = ModelParams::published();
        let j = jacobian(&p, &State::new(0.0, 0.0, 0.0, 0.2)).unwrap();
        let g = p.gamma * p.omega / (p.eta + p.omega);
        assert_eq!(j[(0, 0)], p.r);
        assert!((j[(1, 1)] + p.lambda * 0.2 + p.d + g).abs() < 1e-15);
        assert!((j[(2, 2)] + p.d + p.delta + g).abs() < 1e-15);
        assert_eq!(j[(3, 3)], -p.eta);
    }

    #[test]
    fn validation_rejects_inverted_efficiencies() {
        let mut p = ModelParams::published();
        p.m1 = 0.3;
        assert!(p.validate().is_err());
        assert!(ModelParams::published().validate().is_ok());
    }
}

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::integrate::{integrate_adjoint_backward, integrate_forward, TimeGrid, Trajectory};
use crate::model::{field, ControlTriple, ModelParams, State};

/// Weights of `P1 u1^2/2 + P2 u2^2/2 + P3 u3^2/2 + Q S^2 - R A^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub q: f64,
    pub r: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self::published()
    }
}

impl ObjectiveWeights {
    pub fn published() -> Self {
        Self { p1: 0.8, p2: 0.5, p3: 0.5, q: 10.0, r: 10.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let cost = [self.p1, self.p2, self.p3];
        if !cost.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParams("P1, P2, P3 must be positive".into()));
        }
        if !(self.q.is_finite() && self.q >= 0.0 && self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::InvalidParams("Q and R must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn integrand(&self, y: &[f64; 4], u: &ControlTriple) -> f64 {
        0.5 * (self.p1 * u.u1 * u.u1 + self.p2 * u.u2 * u.u2 + self.p3 * u.u3 * u.u3) + self.q * y[1] * y[1]
            - self.r * y[3] * y[3]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    pub grid: TimeGrid,
    pub values: Vec<ControlTriple>,
}

impl ControlSchedule {
    pub fn constant(grid: TimeGrid, u: ControlTriple) -> Self {
        Self { grid, values: vec![u; grid.len()] }
    }

    pub fn midpoint(&self, k: usize) -> ControlTriple {
        self.values[k].lerp(self.values[k + 1], 0.5)
    }

    pub fn is_admissible(&self) -> bool {
        self.values.iter().all(ControlTriple::is_admissible)
    }
}

/// Composite trapezoid rule for the cost functional.
pub fn objective(weights: &ObjectiveWeights, state: &Trajectory, u: &ControlSchedule) -> Result<f64> {
    if state.grid != u.grid || state.values.len() != u.values.len() {
        return Err(Error::GridMismatch("state and control grids differ".into()));
    }
    let h = state.grid.step();
    let g: Vec<f64> = state.values.iter().zip(&u.values).map(|(y, c)| weights.integrand(y, c)).collect();
    let n = g.len() - 1;
    let inner: f64 = g[1..n].iter().sum();
    let j = h * (0.5 * (g[0] + g[n]) + inner);
    if j.is_finite() {
        Ok(j)
    } else {
        Err(Error::NumericDomain("objective"))
    }
}

pub fn hamiltonian(p: &ModelParams, w: &ObjectiveWeights, y: &[f64; 4], u: &ControlTriple, lam: &[f64; 4]) -> f64 {
    let f = field(p, y, u);
    w.integrand(y, u) + (0..4).map(|j| lam[j] * f[j]).sum::<f64>()
}

/// `d lambda / dt` for the costates.
pub fn adjoint_rhs(p: &ModelParams, w: &ObjectiveWeights, y: &[f64; 4], u: &ControlTriple, lam: &[f64; 4]) -> [f64; 4] {
    let ModelParams { r, k, alpha, phi, a, m1, m2, lambda, d, delta, gamma, sigma, eta, .. } = *p;
    let [x, s, i, aw] = *y;
    let [l1, l2, l3, l4] = *lam;
    let ax = a + x;
    let oa = 1.0 + aw;
    let sat = u.u1 * gamma * aw / oa;
    [
        l1 * (alpha * s + phi * alpha * a * i / (ax * ax) - r * (1.0 - 2.0 * x / k)) - l2 * m1 * alpha * s
            - l3 * m2 * phi * alpha * a * i / (ax * ax),
        -2.0 * w.q * s + l1 * alpha * x + l2 * (sat + u.u2 * lambda * aw + d - m1 * alpha * x)
            - l3 * u.u2 * lambda * aw
            - l4 * sigma,
        l1 * phi * alpha * x / ax + l3 * (sat + d + delta - m2 * phi * alpha * x / ax) - l4 * sigma,
        2.0 * w.r * aw
            + l2 * (u.u1 * gamma * s / (oa * oa) + u.u2 * lambda * s)
            + l3 * (u.u1 * gamma * i / (oa * oa) - u.u2 * lambda * s)
            + l4 * eta,
    ]
}

/// Stationary point of the Hamiltonian in `u` before projection onto `[0,1]^3`.
pub fn pmp_control_unclamped(p: &ModelParams, w: &ObjectiveWeights, y: &[f64; 4], lam: &[f64; 4]) -> ControlTriple {
    let [_, s, i, aw] = *y;
    ControlTriple::new(
        (lam[1] * s + lam[2] * i) * p.gamma * aw / (w.p1 * (1.0 + aw)),
        (lam[1] - lam[2]) * p.lambda * aw * s / w.p2,
        -lam[3] * p.omega / w.p3,
    )
}

pub fn pmp_control(p: &ModelParams, w: &ObjectiveWeights, y: &[f64; 4], lam: &[f64; 4]) -> ControlTriple {
    pmp_control_unclamped(p, w, y, lam).clamped()
}

/// Finite-difference Hessian of the Hamiltonian in the controls.
pub fn control_hessian(p: &ModelParams, w: &ObjectiveWeights, y: &[f64; 4], u: &ControlTriple, lam: &[f64; 4]) -> Matrix3<f64> {
    let h = 1e-3;
    let base = u.to_array();
    let eval = |di: [f64; 3]| {
        let v: [f64; 3] = std::array::from_fn(|k| base[k] + di[k]);
        hamiltonian(p, w, y, &ControlTriple::from_array(v), lam)
    };
    let e = |k: usize, s: f64| {
        let mut v = [0.0; 3];
        v[k] = s;
        v
    };
    let add = |a: [f64; 3], b: [f64; 3]| -> [f64; 3] { std::array::from_fn(|k| a[k] + b[k]) };
    Matrix3::from_fn(|r, c| {
        (eval(add(e(r, h), e(c, h))) - eval(add(e(r, h), e(c, -h))) - eval(add(e(r, -h), e(c, h)))
            + eval(add(e(r, -h), e(c, -h))))
            / (4.0 * h * h)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbsmOptions {
    pub relaxation: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FbsmOptions {
    fn default() -> Self {
        Self { relaxation: 0.5, tol: 1e-3, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Per channel `sum |u_new - u_old| / sum |u_new|`.
    pub relative_change: [f64; 3],
    /// Cost of the control the forward pass of this iteration used.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub state: Trajectory,
    pub adjoint: Trajectory,
    pub control: ControlSchedule,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub hessian_positive_definite: bool,
    pub history: Vec<IterationRecord>,
}

struct Evaluated {
    control: ControlSchedule,
    state: Trajectory,
    adjoint: Trajectory,
    objective: f64,
}

fn evaluate(p: &ModelParams, w: &ObjectiveWeights, s0: &State, control: ControlSchedule) -> Result<Evaluated> {
    let state = integrate_forward(p, s0, &control.grid, Some(&control))?;
    let adjoint = integrate_adjoint_backward(p, &state, &control, w)?;
    let objective = objective(w, &state, &control)?;
    Ok(Evaluated { control, state, adjoint, objective })
}

/// Forward-backward sweep starting from `u = 0`. The returned iterate is the
/// converged control, or the cheapest one seen if the iteration cap is hit.
pub fn fbsm(p: &ModelParams, w: &ObjectiveWeights, s0: &State, grid: &TimeGrid, opts: &FbsmOptions) -> Result<SweepResult> {
    w.validate()?;
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::InvalidParams(format!("relaxation must lie in (0, 1], got {}", opts.relaxation)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut current = evaluate(p, w, s0, ControlSchedule::constant(*grid, ControlTriple::ZERO))?;
    let h = hessian_check(p, w, &current);
    let mut history = Vec::new();
    let mut best: Option<Evaluated> = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut next = Vec::with_capacity(grid.len());
        let mut change = [0.0; 3];
        let mut norm = [0.0; 3];
        for k in 0..grid.len() {
            let target = pmp_control(p, w, &current.state.values[k], &current.adjoint.values[k]).to_array();
            let old = current.control.values[k].to_array();
            let new: [f64; 3] = std::array::from_fn(|c| (1.0 - opts.relaxation) * old[c] + opts.relaxation * target[c]);
            for c in 0..3 {
                change[c] += (new[c] - old[c]).abs();
                norm[c] += new[c].abs();
            }
            next.push(ControlTriple::from_array(new));
        }
        history.push(IterationRecord {
            iteration: iterations,
            relative_change: std::array::from_fn(|c| if norm[c] > 0.0 { change[c] / norm[c] } else { 0.0 }),
            objective: current.objective,
        });
        converged = (0..3).all(|c| opts.tol * norm[c] - change[c] >= 0.0);
        let candidate = evaluate(p, w, s0, ControlSchedule { grid: *grid, values: next })?;
        let previous = std::mem::replace(&mut current, candidate);
        if best.as_ref().is_none_or(|b| previous.objective < b.objective) {
            best = Some(previous);
        }
        if converged {
            break;
        }
    }
    let chosen = match best {
        Some(b) if !converged && b.objective < current.objective => b,
        _ => current,
    };
    Ok(SweepResult {
        state: chosen.state,
        adjoint: chosen.adjoint,
        control: chosen.control,
        objective: chosen.objective,
        iterations,
        converged,
        hessian_positive_definite: h,
        history,
    })
}

fn hessian_check(p: &ModelParams, w: &ObjectiveWeights, ev: &Evaluated) -> bool {
    let hm = control_hessian(p, w, &ev.state.values[0], &ev.control.values[0], &ev.adjoint.values[0]);
    let want = Matrix3::from_diagonal(&nalgebra::Vector3::new(w.p1, w.p2, w.p3));
    let close = (hm - want).amax() <= 1e-6 * want.amax();
    close && hm.symmetric_eigenvalues().iter().all(|v| *v > 0.0)
}

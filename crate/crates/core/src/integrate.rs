use crate::control::{adjoint_rhs, ControlSchedule, ObjectiveWeights};
use crate::error::{Error, Result};
use crate::model::{field, ControlTriple, ModelParams, State};

/// Undershoots down to this value are rounding and get clamped to zero.
pub const NEGATIVE_CLAMP: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && tf > t0) {
            return Err(Error::GridMismatch(format!("need tf > t0, got [{t0}, {tf}]")));
        }
        if n_steps == 0 {
            return Err(Error::GridMismatch("n_steps must be at least 1".into()));
        }
        Ok(Self { t0, tf, n_steps })
    }

    /// Grid whose step is as close to `h` as an integer step count allows.
    pub fn with_step(t0: f64, tf: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::GridMismatch(format!("step must be positive, got {h}")));
        }
        Self::new(t0, tf, ((tf - t0) / h).round().max(1.0) as usize)
    }

    pub fn step(&self) -> f64 {
        (self.tf - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.tf
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { n_steps: self.n_steps * factor, ..*self }
    }
}

/// Node values on a grid: states for forward runs, costates for backward runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub values: Vec<[f64; 4]>,
}

impl Trajectory {
    pub fn state(&self, k: usize) -> State {
        State::from_array(self.values[k])
    }

    pub fn last(&self) -> [f64; 4] {
        self.values[self.values.len() - 1]
    }

    pub fn final_state(&self) -> State {
        State::from_array(self.last())
    }

    fn midpoint(&self, k: usize) -> [f64; 4] {
        let (a, b) = (self.values[k], self.values[k + 1]);
        std::array::from_fn(|j| 0.5 * (a[j] + b[j]))
    }
}

fn axpy(y: &[f64; 4], h: f64, k: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|j| y[j] + h * k[j])
}

fn rk4_combine(y: &[f64; 4], h: f64, k: [[f64; 4]; 4]) -> [f64; 4] {
    std::array::from_fn(|j| y[j] + h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]))
}

fn controls_at(u: Option<&ControlSchedule>, k: usize) -> (ControlTriple, ControlTriple, ControlTriple) {
    match u {
        None => (ControlTriple::UNIT, ControlTriple::UNIT, ControlTriple::UNIT),
        Some(u) => (u.values[k], u.midpoint(k), u.values[k + 1]),
    }
}

/// Classical RK4 with positivity monitoring. Without a schedule the
/// uncontrolled system is integrated.
pub fn integrate_forward(p: &ModelParams, s0: &State, grid: &TimeGrid, u: Option<&ControlSchedule>) -> Result<Trajectory> {
    if let Some(u) = u {
        if u.grid != *grid || u.values.len() != grid.len() {
            return Err(Error::GridMismatch("control schedule does not match the time grid".into()));
        }
    }
    let h = grid.step();
    let mut values = Vec::with_capacity(grid.len());
    let mut y = s0.to_array();
    values.push(y);
    for k in 0..grid.n_steps {
        let (u0, um, u1) = controls_at(u, k);
        let k1 = field(p, &y, &u0);
        let k2 = field(p, &axpy(&y, 0.5 * h, &k1), &um);
        let k3 = field(p, &axpy(&y, 0.5 * h, &k2), &um);
        let k4 = field(p, &axpy(&y, h, &k3), &u1);
        let mut next = rk4_combine(&y, h, [k1, k2, k3, k4]);
        let t = grid.time(k + 1);
        for (c, v) in next.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::StepUnstable { t });
            }
            if *v < NEGATIVE_CLAMP {
                return Err(Error::PositivityViolated { t, component: c, value: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        y = next;
        values.push(y);
    }
    Ok(Trajectory { grid: *grid, values })
}

/// RK4 backwards from a zero terminal costate; states at half steps are
/// linearly interpolated from the stored trajectory.
pub fn integrate_adjoint_backward(
    p: &ModelParams,
    state: &Trajectory,
    u: &ControlSchedule,
    weights: &ObjectiveWeights,
) -> Result<Trajectory> {
    let grid = state.grid;
    if u.grid != grid || u.values.len() != grid.len() || state.values.len() != grid.len() {
        return Err(Error::GridMismatch("state, control and adjoint grids differ".into()));
    }
    let h = grid.step();
    let n = grid.n_steps;
    let mut values = vec![[0.0; 4]; n + 1];
    let mut lam = [0.0; 4];
    for k in (1..=n).rev() {
        let (x1, xm, x0) = (state.values[k], state.midpoint(k - 1), state.values[k - 1]);
        let (c1, cm, c0) = (u.values[k], u.midpoint(k - 1), u.values[k - 1]);
        let k1 = adjoint_rhs(p, weights, &x1, &c1, &lam);
        let k2 = adjoint_rhs(p, weights, &xm, &cm, &axpy(&lam, -0.5 * h, &k1));
        let k3 = adjoint_rhs(p, weights, &xm, &cm, &axpy(&lam, -0.5 * h, &k2));
        let k4 = adjoint_rhs(p, weights, &x0, &c0, &axpy(&lam, -h, &k3));
        lam = rk4_combine(&lam, -h, [k1, k2, k3, k4]);
        if !lam.iter().all(|v| v.is_finite()) {
            return Err(Error::StepUnstable { t: grid.time(k - 1) });
        }
        values[k - 1] = lam;
    }
    Ok(Trajectory { grid, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsCertificate {
    pub l: f64,
    pub sup_xsi: f64,
    pub sup_a: f64,
    pub bound_xsi: f64,
    pub bound_a: f64,
    /// Set when the initial state was already outside the region and only
    /// the second half of the trajectory was checked.
    pub tail_only: bool,
    pub satisfied: bool,
}

pub const BOUNDS_SLACK: f64 = 1e-6;

pub fn bounds_certificate(p: &ModelParams, traj: &Trajectory) -> BoundsCertificate {
    let l = p.k * (p.r + p.d).powi(2) / (4.0 * p.r);
    let bound_xsi = l / p.d;
    let bound_a = (p.omega * p.d + p.sigma * l) / (p.eta * p.d);
    let inside = |v: &[f64; 4]| {
        v[0] + v[1] + v[2] <= bound_xsi * (1.0 + BOUNDS_SLACK) && v[3] <= bound_a * (1.0 + BOUNDS_SLACK)
    };
    let tail_only = traj.values.first().is_some_and(|v| !inside(v));
    let start = if tail_only { traj.values.len() / 2 } else { 0 };
    let (mut sup_xsi, mut sup_a) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in &traj.values[start..] {
        sup_xsi = sup_xsi.max(v[0] + v[1] + v[2]);
        sup_a = sup_a.max(v[3]);
    }
    let satisfied = sup_xsi <= bound_xsi * (1.0 + BOUNDS_SLACK) && sup_a <= bound_a * (1.0 + BOUNDS_SLACK);
    BoundsCertificate { l, sup_xsi, sup_a, bound_xsi, bound_a, tail_only, satisfied }
}

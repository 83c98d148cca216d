//! Time integration.
//!
//! Classical fixed-step RK4 for the forward flow `xdot = f(x) + G(x) u`
//! with piecewise-constant controls, backward RK4 for the linear adjoint
//! ODE `psidot = -DF(x, u)' psi`, and control concatenation.  All routines
//! are deterministic: identical inputs produce bit-identical outputs.

use crate::error::{Error, Result};
use crate::systems::{check_control_dim, ControlAffineSystem, ControlVector, StateVector};

/// Uniform time grid `t_i = T * i / steps` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Node time `t_i`; `node(steps)` is exactly the horizon.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.steps);
        self.horizon * (i as f64 / self.steps as f64)
    }
}

/// Piecewise-constant control: `values[i]` acts on `[t_i, t_{i+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTrajectory {
    grid: TimeGrid,
    values: Vec<ControlVector>,
}

impl ControlTrajectory {
    /// Wrap explicit per-step controls; one `ControlVector` per step, all
    /// with the same channel count and finite entries.
    pub fn new(grid: TimeGrid, values: Vec<ControlVector>) -> Result<Self> {
        if values.len() != grid.steps() {
            return Err(Error::GridMismatch {
                expected: grid.steps(),
                got: values.len(),
            });
        }
        let m = values[0].len();
        for (i, v) in values.iter().enumerate() {
            if v.len() != m {
                return Err(Error::InvalidConfig(format!(
                    "control at step {i} has {} channels, expected {m}",
                    v.len()
                )));
            }
            if !v.all_finite() {
                return Err(Error::InvalidConfig(format!(
                    "control at step {i} has non-finite entries"
                )));
            }
        }
        Ok(Self { grid, values })
    }

    /// The zero control with `m` channels.
    pub fn zero(grid: TimeGrid, m: usize) -> Self {
        Self {
            grid,
            values: vec![ControlVector::zeros(m); grid.steps()],
        }
    }

    /// The control frozen at a single value for all steps.
    pub fn constant(grid: TimeGrid, u: ControlVector) -> Self {
        Self {
            grid,
            values: vec![u; grid.steps()],
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn control_dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[ControlVector] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [ControlVector] {
        &mut self.values
    }

    pub fn at(&self, step: usize) -> &ControlVector {
        &self.values[step]
    }

    /// Largest step norm `max_i ||u_i||`.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(ControlVector::norm).fold(0.0, f64::max)
    }

    /// Sup distance `max_i ||u_i - v_i||` to another trajectory.
    pub fn sup_distance(&self, other: &ControlTrajectory) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let mut d = a.clone();
                d.scaled_add(-1.0, b);
                d.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Project every step onto the closed ball of radius `r`.
    pub fn project_ball(&mut self, r: f64) {
        for v in &mut self.values {
            v.project_ball(r);
        }
    }

    /// Whether every step lies in the ball of radius `r` (with slack for
    /// roundoff).
    pub fn within_ball(&self, r: f64, slack: f64) -> bool {
        self.values.iter().all(|v| v.norm() <= r + slack)
    }
}

/// States at the grid nodes of a (possibly partial) integration interval:
/// `states[i]` sits at node `first_step + i`.
#[derive(Debug, Clone)]
pub struct StatePath<S> {
    grid: TimeGrid,
    first_step: usize,
    states: Vec<S>,
}

impl<S: StateVector> StatePath<S> {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn first_step(&self) -> usize {
        self.first_step
    }

    pub fn last_step(&self) -> usize {
        self.first_step + self.states.len() - 1
    }

    /// State at an absolute node index.
    pub fn state(&self, step: usize) -> &S {
        assert!(
            step >= self.first_step && step <= self.last_step(),
            "node {} outside the integrated range [{}, {}]",
            step,
            self.first_step,
            self.last_step()
        );
        &self.states[step - self.first_step]
    }

    pub fn initial(&self) -> &S {
        &self.states[0]
    }

    pub fn terminal(&self) -> &S {
        self.states.last().expect("paths are never empty")
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    /// True when the path spans the whole grid `[0, steps]`.
    pub fn is_full(&self) -> bool {
        self.first_step == 0 && self.last_step() == self.grid.steps()
    }
}

/// Adjoint states at all grid nodes (always full-range, integrated
/// backward from the terminal condition).
#[derive(Debug, Clone)]
pub struct AdjointPath<S> {
    grid: TimeGrid,
    states: Vec<S>,
}

impl<S: StateVector> AdjointPath<S> {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// Adjoint state at node `i`.
    pub fn state(&self, step: usize) -> &S {
        &self.states[step]
    }

    pub fn terminal(&self) -> &S {
        self.states.last().expect("paths are never empty")
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }
}

/// One RK4 step of `xdot = f(t, x) + G(t, x) u` with `u` frozen.
fn rk4_step<S: ControlAffineSystem>(
    system: &S,
    t: f64,
    dt: f64,
    x: &S::State,
    u: &ControlVector,
) -> S::State {
    let eval = |tt: f64, xx: &S::State| -> S::State {
        let mut f = system.drift(tt, xx);
        let gu = system.control_apply(tt, xx, u);
        f.scaled_add(1.0, &gu);
        f
    };
    let k1 = eval(t, x);
    let mut stage = x.clone();
    stage.scaled_add(0.5 * dt, &k1);
    let k2 = eval(t + 0.5 * dt, &stage);
    let mut stage = x.clone();
    stage.scaled_add(0.5 * dt, &k2);
    let k3 = eval(t + 0.5 * dt, &stage);
    let mut stage = x.clone();
    stage.scaled_add(dt, &k3);
    let k4 = eval(t + dt, &stage);

    let mut next = x.clone();
    next.scaled_add(dt / 6.0, &k1);
    next.scaled_add(dt / 3.0, &k2);
    next.scaled_add(dt / 3.0, &k3);
    next.scaled_add(dt / 6.0, &k4);
    next
}

/// Integrate the state forward from node `from_step` to node `to_step`
/// under the piecewise-constant control `u`, starting at `x_init`.
///
/// Returns the states at every node of `[from_step, to_step]`.  A
/// non-finite state aborts with [`Error::Divergence`] carrying the node
/// index at which the blow-up appeared.
pub fn integrate_forward<S: ControlAffineSystem>(
    system: &S,
    x_init: &S::State,
    u: &ControlTrajectory,
    from_step: usize,
    to_step: usize,
) -> Result<StatePath<S::State>> {
    let grid = u.grid();
    if to_step > grid.steps() || from_step > to_step {
        return Err(Error::IndexOutOfRange {
            index: from_step.max(to_step),
            len: grid.steps() + 1,
        });
    }
    check_control_dim(system, u.at(0))?;
    if !x_init.all_finite() {
        return Err(Error::Divergence { step: from_step });
    }
    let dt = grid.dt();
    let mut states = Vec::with_capacity(to_step - from_step + 1);
    let mut x = x_init.clone();
    states.push(x.clone());
    for i in from_step..to_step {
        x = rk4_step(system, grid.node(i), dt, &x, u.at(i));
        if !x.all_finite() {
            return Err(Error::Divergence { step: i + 1 });
        }
        states.push(x.clone());
    }
    Ok(StatePath {
        grid,
        first_step: from_step,
        states,
    })
}

/// Integrate the adjoint ODE `psidot = -DF(x, u)' psi` backward from
/// `psi_T = Dl(x_T)` along a full forward path.
///
/// The backward RK4 stages need the forward state between nodes; it is
/// interpolated linearly there, which keeps the scheme consistent without
/// storing substep states.
pub fn integrate_adjoint<S: ControlAffineSystem>(
    system: &S,
    xbar: &StatePath<S::State>,
    ubar: &ControlTrajectory,
) -> Result<AdjointPath<S::State>> {
    let grid = ubar.grid();
    if xbar.grid() != grid {
        return Err(Error::InvalidConfig(
            "state path and control live on different time grids".into(),
        ));
    }
    if !xbar.is_full() {
        return Err(Error::InvalidConfig(
            "adjoint integration needs the state path on the full grid".into(),
        ));
    }
    let steps = grid.steps();
    let dt = grid.dt();

    // rhs(t, x, psi) = -(Df' psi + (D_x[G u])' psi)
    let rhs = |t: f64, x: &S::State, u: &ControlVector, psi: &S::State| -> S::State {
        let mut g = system.drift_jacobian_adjoint(t, x, psi);
        let cj = system.control_jacobian_adjoint(t, x, u, psi);
        g.scaled_add(1.0, &cj);
        g.scale(-1.0);
        g
    };

    let mut states: Vec<S::State> = Vec::with_capacity(steps + 1);
    let mut psi = system.terminal_cost_gradient(xbar.terminal());
    if !psi.all_finite() {
        return Err(Error::Divergence { step: steps });
    }
    states.push(psi.clone());

    // March backward over [t_{i-1}, t_i] with step h = -dt; the stage
    // states are x at t_i, the interval midpoint, and t_{i-1}.
    let h = -dt;
    for i in (1..=steps).rev() {
        let t_right = grid.node(i);
        let x_right = xbar.state(i);
        let x_left = xbar.state(i - 1);
        let mut x_mid = x_left.clone();
        x_mid.scale(0.5);
        x_mid.scaled_add(0.5, x_right);
        let u = ubar.at(i - 1);

        let k1 = rhs(t_right, x_right, u, &psi);
        let mut stage = psi.clone();
        stage.scaled_add(0.5 * h, &k1);
        let k2 = rhs(t_right + 0.5 * h, &x_mid, u, &stage);
        let mut stage = psi.clone();
        stage.scaled_add(0.5 * h, &k2);
        let k3 = rhs(t_right + 0.5 * h, &x_mid, u, &stage);
        let mut stage = psi.clone();
        stage.scaled_add(h, &k3);
        let k4 = rhs(t_right + h, x_left, u, &stage);

        psi.scaled_add(h / 6.0, &k1);
        psi.scaled_add(h / 3.0, &k2);
        psi.scaled_add(h / 3.0, &k3);
        psi.scaled_add(h / 6.0, &k4);
        if !psi.all_finite() {
            return Err(Error::Divergence { step: i - 1 });
        }
        states.push(psi.clone());
    }
    states.reverse();
    Ok(AdjointPath { grid, states })
}

/// The concatenation `u |>_s ubar`: equal to `u` before node `s` and to
/// `ubar` from node `s` on.
pub fn concat_controls(
    u: &ControlTrajectory,
    ubar: &ControlTrajectory,
    s: usize,
) -> Result<ControlTrajectory> {
    if u.grid() != ubar.grid() {
        return Err(Error::InvalidConfig(
            "concatenated controls live on different time grids".into(),
        ));
    }
    if u.control_dim() != ubar.control_dim() {
        return Err(Error::InvalidConfig(
            "concatenated controls have different channel counts".into(),
        ));
    }
    let steps = u.grid().steps();
    if s > steps {
        return Err(Error::IndexOutOfRange {
            index: s,
            len: steps + 1,
        });
    }
    let values = (0..steps)
        .map(|i| {
            if i < s {
                u.at(i).clone()
            } else {
                ubar.at(i).clone()
            }
        })
        .collect();
    Ok(ControlTrajectory {
        grid: u.grid(),
        values,
    })
}

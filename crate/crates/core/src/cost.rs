//! The cost functional and its pointwise machinery.
//!
//! Total cost `I[u] = l(x_T) + (alpha/2) integral ||u_t||^2 dt`, the
//! Hamilton-Pontryagin functional, the pointwise feedback minimizer with
//! ball projection, the exact cost-increment identity, and the adjoint
//! representation of the cost gradient.

use crate::dynamics::{AdjointPath, ControlTrajectory, StatePath};
use crate::error::{Error, Result};
use crate::systems::{ControlAffineSystem, ControlVector};

/// Terminal and energy parts of the cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// `l(x_T)`.
    pub terminal: f64,
    /// `(alpha/2) integral ||u||^2 dt` (rectangle rule — exact for the
    /// piecewise-constant control class).
    pub energy: f64,
    /// `terminal + energy`.
    pub total: f64,
}

/// Evaluate the cost of a control along its state path.
///
/// `x` must be the full path of `u` on the same time grid.
pub fn total_cost<S: ControlAffineSystem>(
    system: &S,
    x: &StatePath<S::State>,
    u: &ControlTrajectory,
) -> Result<CostBreakdown> {
    if x.grid() != u.grid() {
        return Err(Error::InvalidConfig(
            "state path and control live on different time grids".into(),
        ));
    }
    if !x.is_full() {
        return Err(Error::InvalidConfig(
            "cost evaluation needs the state path on the full grid".into(),
        ));
    }
    let dt = u.grid().dt();
    let alpha = system.energy_weight();
    let sum_sq: f64 = u.values().iter().map(|v| v.dot(v)).sum();
    let energy = 0.5 * alpha * dt * sum_sq;
    let terminal = system.terminal_cost(x.terminal());
    Ok(CostBreakdown {
        terminal,
        energy,
        total: terminal + energy,
    })
}

/// Hamilton-Pontryagin functional
/// `H(t, x, p, u) = (alpha/2) ||u||^2 + <p, f(x)> + <u, G(x)' p>`.
pub fn hamiltonian<S: ControlAffineSystem>(
    system: &S,
    t: f64,
    x: &S::State,
    p: &S::State,
    u: &ControlVector,
) -> f64 {
    let alpha = system.energy_weight();
    let drift = system.drift(t, x);
    0.5 * alpha * u.dot(u) + system.inner(p, &drift) + u.dot(&system.control_adjoint(t, x, p))
}

/// Pointwise minimizer of `u -> (alpha/2) ||u||^2 + <u, gp>` over the ball
/// of radius `R`, where `gp = G(x)' Dp` is supplied by the caller.
///
/// * `alpha > 0`: the radial projection of `-gp / alpha` onto the ball.
/// * `alpha = 0`: the boundary point `-R gp / ||gp||`; a vanishing `gp`
///   makes every direction a minimizer of the zero linear form, and the
///   deterministic choice here is the zero control (keeps the baseline).
pub fn feedback_minimizer<S: ControlAffineSystem>(system: &S, gp: &ControlVector) -> ControlVector {
    let alpha = system.energy_weight();
    let r = system.control_bound();
    if alpha > 0.0 {
        let mut w = gp.clone();
        w.scale(-1.0 / alpha);
        w.project_ball(r);
        w
    } else {
        let norm = gp.norm();
        if norm == 0.0 {
            ControlVector::zeros(gp.len())
        } else {
            let mut w = gp.clone();
            w.scale(-r / norm);
            w
        }
    }
}

/// The exact increment identity evaluated by time quadrature:
///
/// ```text
///   I[u] - I[ubar] = integral ( Hbar(x_t, u_t) - Hbar(x_t, ubar_t) ) dt,
///   Hbar(x, v) = (alpha/2) ||v||^2 + <v, G(x)' Dpbar_t(x)>,
/// ```
///
/// where `x` is the path of `u`, `pbar_t = l o Phibar_{t,T}` is the
/// terminal cost pulled back along the baseline flow, and `probes[i]`
/// supplies `G(x_{t_i})' Dpbar_{t_i}(x_{t_i})` at node `i` (one value per
/// time node, `steps + 1` in total — typically finite-difference probes
/// from the sample-and-hold module, or a variational oracle in tests).
///
/// The energy difference is integrated by the rectangle rule (exact for
/// piecewise-constant controls); the coupling term by the trapezoid rule in
/// `t`, since the probe values vary along the path.  Identical controls
/// yield exactly zero.  This is a verification identity, not part of any
/// descent loop.
pub fn increment<S: ControlAffineSystem>(
    system: &S,
    ubar: &ControlTrajectory,
    u: &ControlTrajectory,
    probes: &[ControlVector],
) -> Result<f64> {
    if u.grid() != ubar.grid() {
        return Err(Error::InvalidConfig(
            "controls live on different time grids".into(),
        ));
    }
    let steps = u.grid().steps();
    if probes.len() != steps + 1 {
        return Err(Error::InvalidConfig(format!(
            "need one probe per time node ({} values), got {}",
            steps + 1,
            probes.len()
        )));
    }
    let dt = u.grid().dt();
    let alpha = system.energy_weight();
    let mut acc = 0.0;
    for i in 0..steps {
        let ui = u.at(i);
        let vi = ubar.at(i);
        let mut du = ui.clone();
        du.scaled_add(-1.0, vi);
        let energy_diff = 0.5 * alpha * (ui.dot(ui) - vi.dot(vi));
        let coupling = 0.5 * (du.dot(&probes[i]) + du.dot(&probes[i + 1]));
        acc += dt * (energy_diff + coupling);
    }
    Ok(acc)
}

/// Adjoint representation of the cost gradient, one vector per time step:
///
/// ```text
///   g_i = alpha u_i + (G(x_i)' psi_i + G(x_{i+1})' psi_{i+1}) / 2.
/// ```
///
/// The directional derivative of the discrete cost along `du` is then
/// `sum_i dt <du_i, g_i>`.  The adjoint term is paired by the trapezoid
/// rule across each step: the control is frozen on `[t_i, t_{i+1})` while
/// `G' psi` varies, and the one-sided (left endpoint) pairing would carry
/// an O(dt) bias that the averaged one does not.
pub fn cost_gradient<S: ControlAffineSystem>(
    system: &S,
    x: &StatePath<S::State>,
    psi: &AdjointPath<S::State>,
    u: &ControlTrajectory,
) -> Result<Vec<ControlVector>> {
    let grid = u.grid();
    if x.grid() != grid || psi.grid() != grid {
        return Err(Error::InvalidConfig(
            "paths and control live on different time grids".into(),
        ));
    }
    if !x.is_full() {
        return Err(Error::InvalidConfig(
            "gradient needs the state path on the full grid".into(),
        ));
    }
    let alpha = system.energy_weight();
    let steps = grid.steps();
    let mut grad = Vec::with_capacity(steps);
    for i in 0..steps {
        let t0 = grid.node(i);
        let t1 = grid.node(i + 1);
        let mut g = system.control_adjoint(t0, x.state(i), psi.state(i));
        let g1 = system.control_adjoint(t1, x.state(i + 1), psi.state(i + 1));
        g.scale(0.5);
        g.scaled_add(0.5, &g1);
        g.scaled_add(alpha, u.at(i));
        grad.push(g);
    }
    Ok(grad)
}

/// `sum_i dt <du_i, g_i>` — the discrete L2 pairing of a gradient with a
/// control direction.
pub fn pair_gradient(grad: &[ControlVector], du: &ControlTrajectory) -> f64 {
    let dt = du.grid().dt();
    grad.iter()
        .zip(du.values())
        .map(|(g, d)| g.dot(d))
        .sum::<f64>()
        * dt
}

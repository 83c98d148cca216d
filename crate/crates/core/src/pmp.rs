//! Adjoint-based descent toward Pontryagin extremals.
//!
//! Each iteration integrates the state forward under the current control,
//! the adjoint backward, and moves toward the pointwise Hamiltonian
//! minimizer `-G' psi / alpha` by a convex combination whose weight `eta`
//! is backtracked until the cost does not increase.  Accepted iterates are
//! therefore nonincreasing in cost by construction.

use std::time::Instant;

use crate::cost::{feedback_minimizer, total_cost};
use crate::dynamics::{integrate_adjoint, integrate_forward, ControlTrajectory};
use crate::error::{Error, Result};
use crate::report::{DescentReport, IterationRecord, StepDetail};
use crate::systems::{ControlAffineSystem, ControlVector};

/// Knobs of the PMP descent loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmpConfig {
    /// Maximum accepted iterations.
    pub max_iters: usize,
    /// Initial convex-combination weight, reset here every iteration.
    pub eta0: f64,
    /// Multiplier applied to `eta` on each rejected candidate.
    pub backtrack_factor: f64,
    /// Backtracking floor: `eta` falling below this ends the run.
    pub eta_min: f64,
    /// Relative cost-decrease stopping tolerance.
    pub tol_rel: f64,
}

impl Default for PmpConfig {
    fn default() -> Self {
        Self {
            max_iters: 40,
            eta0: 0.5,
            backtrack_factor: 0.5,
            eta_min: 1e-6,
            tol_rel: 1e-8,
        }
    }
}

impl PmpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta0 > 0.0 && self.eta0 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta0 must lie in (0, 1), got {}",
                self.eta0
            )));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if !(self.eta_min > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta_min must be positive, got {}",
                self.eta_min
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.tol_rel >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol_rel must be nonnegative, got {}",
                self.tol_rel
            )));
        }
        Ok(())
    }
}

fn require_positive_alpha<S: ControlAffineSystem>(system: &S) -> Result<f64> {
    let alpha = system.energy_weight();
    if alpha <= 0.0 {
        return Err(Error::InvalidConfig(
            "the PMP update divides by alpha; it needs alpha > 0".into(),
        ));
    }
    Ok(alpha)
}

fn require_admissible<S: ControlAffineSystem>(system: &S, u: &ControlTrajectory) -> Result<()> {
    let r = system.control_bound();
    if !u.within_ball(r, 1e-9 * r.max(1.0)) {
        return Err(Error::InvalidConfig(format!(
            "initial control leaves the admissible ball: max norm {} > R = {r}",
            u.max_norm()
        )));
    }
    Ok(())
}

/// Run the PMP descent from `u0`, starting the state at `x_init`.
///
/// Per iteration: solve forward, solve the adjoint backward, form the
/// candidate `(1 - eta) ubar - eta G' psi / alpha` (projected onto the
/// admissible ball step by step), and halve `eta` until the candidate's
/// cost does not exceed the current one.  `eta` restarts at `eta0` every
/// iteration; exhausting the backtracking (`eta < eta_min`) or a relative
/// decrease below `tol_rel` ends the run.
pub fn pmp_descend<S: ControlAffineSystem>(
    system: &S,
    x_init: &S::State,
    u0: &ControlTrajectory,
    cfg: &PmpConfig,
) -> Result<DescentReport<S::State>> {
    cfg.validate()?;
    let alpha = require_positive_alpha(system)?;
    require_admissible(system, u0)?;
    let grid = u0.grid();
    let steps = grid.steps();
    let r = system.control_bound();

    let mut ubar = u0.clone();
    let mut xbar = integrate_forward(system, x_init, &ubar, 0, steps)?;
    let mut cost_bar = total_cost(system, &xbar, &ubar)?;
    let mut records = vec![IterationRecord {
        iter: 0,
        cost: cost_bar,
        wall_ms: 0.0,
        detail: StepDetail::Init,
        control: ubar.clone(),
    }];

    for iter in 1..=cfg.max_iters {
        let started = Instant::now();
        let psi = integrate_adjoint(system, &xbar, &ubar)?;

        // Steering target: the unprojected Hamiltonian minimizer
        // -G'(x_i) psi_i / alpha at the left node of each step.
        let steer: Vec<ControlVector> = (0..steps)
            .map(|i| {
                let mut g = system.control_adjoint(grid.node(i), xbar.state(i), psi.state(i));
                g.scale(-1.0 / alpha);
                g
            })
            .collect();

        let mut eta = cfg.eta0;
        let mut accepted = None;
        while eta >= cfg.eta_min {
            let values: Vec<ControlVector> = ubar
                .values()
                .iter()
                .zip(&steer)
                .map(|(u, s)| {
                    let mut cand = u.clone();
                    cand.scale(1.0 - eta);
                    cand.scaled_add(eta, s);
                    cand.project_ball(r);
                    cand
                })
                .collect();
            let candidate = ControlTrajectory::new(grid, values)?;
            let path = integrate_forward(system, x_init, &candidate, 0, steps)?;
            let cost = total_cost(system, &path, &candidate)?;
            if cost.total <= cost_bar.total {
                accepted = Some((candidate, path, cost, eta));
                break;
            }
            eta *= cfg.backtrack_factor;
        }

        let Some((candidate, path, cost, eta)) = accepted else {
            // Backtracking exhausted without a non-increasing candidate:
            // keep the current iterate and stop.
            break;
        };
        let decrease = cost_bar.total - cost.total;
        let rel = decrease / cost_bar.total.abs().max(1.0);
        ubar = candidate;
        xbar = path;
        cost_bar = cost;
        records.push(IterationRecord {
            iter,
            cost,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            detail: StepDetail::Pmp { eta },
            control: ubar.clone(),
        });
        if rel < cfg.tol_rel {
            break;
        }
    }

    Ok(DescentReport {
        records,
        control: ubar,
        path: xbar,
        smoothed: None,
    })
}

/// Extremality defect of a control: integrate its state and adjoint, then
/// take `max_i || u_i - P_ball(-G' psi_i / alpha) ||` over the left nodes.
/// Zero exactly at controls satisfying the pointwise minimum condition.
pub fn pmp_residual<S: ControlAffineSystem>(
    system: &S,
    x_init: &S::State,
    u: &ControlTrajectory,
) -> Result<f64> {
    require_positive_alpha(system)?;
    let grid = u.grid();
    let steps = grid.steps();
    let x = integrate_forward(system, x_init, u, 0, steps)?;
    let psi = integrate_adjoint(system, &x, u)?;
    let mut worst = 0.0f64;
    for i in 0..steps {
        let gp = system.control_adjoint(grid.node(i), x.state(i), psi.state(i));
        let best = feedback_minimizer(system, &gp);
        let mut diff = u.at(i).clone();
        diff.scaled_add(-1.0, &best);
        worst = worst.max(diff.norm());
    }
    Ok(worst)
}

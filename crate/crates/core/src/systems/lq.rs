//! Scalar linear-quadratic toy problem with closed-form optimum.
//!
//! Dynamics `xdot = u` (one channel, unit gain), terminal cost
//! `l(x) = 1/2 (x - target)^2`, energy weight `alpha`.  Starting from
//! `x0 = 0`, the adjoint is constant in time, so the optimal control is the
//! constant `c* = target / (horizon + alpha)` with minimum cost
//! `alpha * target^2 / (2 (horizon + alpha))`.  Every descent method is
//! validated against these two numbers.

use crate::error::{Error, Result};
use crate::systems::{ControlAffineSystem, ControlVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqToyParams {
    /// Energy weight `alpha > 0`.
    pub alpha: f64,
    /// Terminal target value.
    pub target: f64,
    /// Horizon `T`.
    pub horizon: f64,
}

impl Default for LqToyParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            target: 1.0,
            horizon: 1.0,
        }
    }
}

impl LqToyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !self.target.is_finite() {
            return Err(Error::InvalidConfig("target must be finite".into()));
        }
        Ok(())
    }
}

/// The toy system.  The control bound is fixed far outside the operating
/// range so the ball projection stays inactive and the closed forms apply.
#[derive(Debug, Clone, Copy)]
pub struct LqSystem {
    params: LqToyParams,
    r: f64,
}

/// Build the toy system from its parameters.
pub fn lq_toy_system(params: LqToyParams) -> Result<LqSystem> {
    params.validate()?;
    Ok(LqSystem { params, r: 1e6 })
}

impl LqSystem {
    pub fn params(&self) -> &LqToyParams {
        &self.params
    }

    /// Replace the control bound.  With a small radius the ball projection
    /// becomes active and the unconstrained closed forms stop applying;
    /// useful for exercising the constrained branches of the solvers.
    pub fn with_control_bound(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "control bound must be positive and finite, got {r}"
            )));
        }
        self.r = r;
        Ok(self)
    }

    /// The optimal constant control `target / (horizon + alpha)`.
    ///
    /// Over constant controls `c`, the cost `1/2 (c T - target)^2 +
    /// (alpha/2) c^2 T` is minimized here; since the adjoint of this problem
    /// is constant in time, the same constant is optimal over all controls.
    pub fn optimal_constant(&self) -> f64 {
        self.params.target / (self.params.horizon + self.params.alpha)
    }

    /// The minimum cost `alpha * target^2 / (2 (horizon + alpha))`.
    pub fn optimal_cost(&self) -> f64 {
        self.params.alpha * self.params.target * self.params.target
            / (2.0 * (self.params.horizon + self.params.alpha))
    }
}

impl ControlAffineSystem for LqSystem {
    type State = f64;

    fn control_dim(&self) -> usize {
        1
    }

    fn control_bound(&self) -> f64 {
        self.r
    }

    fn energy_weight(&self) -> f64 {
        self.params.alpha
    }

    fn drift(&self, _t: f64, _x: &f64) -> f64 {
        0.0
    }

    fn control_apply(&self, _t: f64, _x: &f64, u: &ControlVector) -> f64 {
        debug_assert_eq!(u.len(), 1);
        u.0[0]
    }

    fn control_adjoint(&self, _t: f64, _x: &f64, p: &f64) -> ControlVector {
        ControlVector(vec![*p])
    }

    fn channels(&self, _t: f64, _x: &f64) -> Vec<(ControlVector, f64)> {
        vec![(ControlVector(vec![1.0]), 1.0)]
    }

    fn drift_jacobian_adjoint(&self, _t: f64, _x: &f64, _p: &f64) -> f64 {
        0.0
    }

    fn terminal_cost(&self, x: &f64) -> f64 {
        let d = x - self.params.target;
        0.5 * d * d
    }

    fn terminal_cost_gradient(&self, x: &f64) -> f64 {
        x - self.params.target
    }

    fn inner(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
}

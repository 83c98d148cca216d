//! The control-affine system contract and its concrete instances.
//!
//! A system provides the drift `f`, the control operator `G` with its
//! finite-rank channel structure `G(x)u = sum_j <u, g_j> h_j`, the adjoint
//! Jacobians needed by the backward (adjoint) ODE, the terminal cost and its
//! gradient, and the inner product of the state space.

use crate::error::{Error, Result};
use crate::spectral::GridFunction;

pub mod amari;
pub mod lq;
pub mod special;

pub use amari::{AmariParams, AmariSystem};
pub use lq::{lq_toy_system, LqSystem, LqToyParams};

/// A control value `u` in `R^m` — one amplitude per actuation channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector(pub Vec<f64>);

impl ControlVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    /// Standard basis vector `e_j`.
    pub fn unit(m: usize, j: usize) -> Self {
        let mut v = vec![0.0; m];
        v[j] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &ControlVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// `self += a * other`.
    pub fn scaled_add(&mut self, a: f64, other: &ControlVector) {
        debug_assert_eq!(self.len(), other.len());
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            *s += a * o;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for s in self.0.iter_mut() {
            *s *= a;
        }
    }

    /// Radial projection onto the closed ball of radius `r`.
    pub fn project_ball(&mut self, r: f64) {
        let n = self.norm();
        if n > r {
            self.scale(r / n);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Minimal vector-space interface the integrators need from a state type.
///
/// Implemented by `f64` (scalar toy problems) and [`GridFunction`]
/// (function-space states).
pub trait StateVector: Clone + Send + Sync {
    /// Zero element of the same shape as `self`.
    fn zeros_like(&self) -> Self;
    /// `self += a * other`.
    fn scaled_add(&mut self, a: f64, other: &Self);
    /// `self *= a`.
    fn scale(&mut self, a: f64);
    /// All components finite (used for divergence detection).
    fn all_finite(&self) -> bool;
}

impl StateVector for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }

    fn scaled_add(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }

    fn scale(&mut self, a: f64) {
        *self *= a;
    }

    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl StateVector for GridFunction {
    fn zeros_like(&self) -> Self {
        GridFunction::zeros(self.grid())
    }

    fn scaled_add(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.grid(), other.grid());
        for (s, o) in self.values_mut().iter_mut().zip(other.values()) {
            *s += a * o;
        }
    }

    fn scale(&mut self, a: f64) {
        for s in self.values_mut() {
            *s *= a;
        }
    }

    fn all_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// A control-affine system `xdot = f_t(x) + G_t(x) u` with terminal cost
/// `l` and control-energy weight `alpha`.
///
/// Structural misuse (states from a different grid, wrong channel count) is
/// a programming error and may panic; runtime blow-ups are caught by the
/// integrators via [`StateVector::all_finite`].
pub trait ControlAffineSystem: Send + Sync {
    type State: StateVector;

    /// Number of control channels `m`.
    fn control_dim(&self) -> usize;

    /// Radius `R` of the admissible control ball in `R^m`.
    fn control_bound(&self) -> f64;

    /// Energy weight `alpha >= 0`.
    fn energy_weight(&self) -> f64;

    /// Drift `f_t(x)`.
    fn drift(&self, t: f64, x: &Self::State) -> Self::State;

    /// Control action `G_t(x) u`.
    fn control_apply(&self, t: f64, x: &Self::State, u: &ControlVector) -> Self::State;

    /// Adjoint action `G_t(x)' p` as a vector of channel pairings.
    fn control_adjoint(&self, t: f64, x: &Self::State, p: &Self::State) -> ControlVector;

    /// The finite-rank channel pairs `(g_j, h_j)` with
    /// `G_t(x) u = sum_j <u, g_j> h_j`.
    fn channels(&self, t: f64, x: &Self::State) -> Vec<(ControlVector, Self::State)>;

    /// Adjoint drift Jacobian `D f_t(x)' p` (for the backward adjoint ODE).
    fn drift_jacobian_adjoint(&self, t: f64, x: &Self::State, p: &Self::State) -> Self::State;

    /// Adjoint of the control-operator Jacobian, `(D_x [G_t(x) u])' p`.
    ///
    /// Zero whenever `G` does not depend on the state, which covers both
    /// bundled systems; the default returns zero.
    fn control_jacobian_adjoint(
        &self,
        _t: f64,
        _x: &Self::State,
        _u: &ControlVector,
        p: &Self::State,
    ) -> Self::State {
        p.zeros_like()
    }

    /// Terminal cost `l(x)`.
    fn terminal_cost(&self, x: &Self::State) -> f64;

    /// Gradient `Dl(x)`, identified with a state through [`Self::inner`].
    fn terminal_cost_gradient(&self, x: &Self::State) -> Self::State;

    /// Inner product / duality pairing of the state space.
    fn inner(&self, a: &Self::State, b: &Self::State) -> f64;
}

/// Validate that a control value has the system's channel count.
pub(crate) fn check_control_dim<S: ControlAffineSystem>(
    system: &S,
    u: &ControlVector,
) -> Result<()> {
    if u.len() != system.control_dim() {
        return Err(Error::InvalidConfig(format!(
            "control has {} channels, system expects {}",
            u.len(),
            system.control_dim()
        )));
    }
    Ok(())
}

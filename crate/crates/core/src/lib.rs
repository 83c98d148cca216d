//! Numerical toolkit for optimal control of control-affine ODEs
//!
//! The problem class: minimize a terminal cost plus a control-energy term,
//!
//! ```text
//!   I[u] = l(x_T) + (alpha/2) * integral_0^T ||u_t||^2 dt,
//!   xdot = f(x) + G(x) u,    ||u_t|| <= R,
//! ```
//!
//! where the state may live in a function space (here: continuous functions
//! on the circle, discretized pseudospectrally) and the control acts through
//! finitely many channels `G(x)u = sum_j <u, g_j> h_j`.
//!
//! Two indirect descent methods are provided:
//!
//! * [`pmp::pmp_descend`] — the classical adjoint-based descent: integrate
//!   the state forward, the adjoint backward, and move toward the pointwise
//!   Hamiltonian minimizer with a backtracking convex-combination step.
//! * [`monotone::monotone_descend`] — a sample-and-hold synthesis that
//!   probes the terminal cost along each actuation channel by plain forward
//!   solves (no adjoint) and applies the pointwise feedback minimizer on
//!   each sample subinterval.  An exact cost-increment identity makes every
//!   accepted sweep decrease the cost.
//!
//! Concrete systems: an Amari-type neural field on the circle
//! ([`systems::amari`]) and a scalar linear-quadratic toy with closed-form
//! optimum used as a validation oracle ([`systems::lq`]).

pub mod cost;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod monotone;
pub mod pmp;
pub mod report;
pub mod spectral;
pub mod systems;

pub use error::{Error, Result};

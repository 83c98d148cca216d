//! Amari-type neural field on the circle.
//!
//! State: a continuous activity profile `x(theta)` sampled on a
//! [`CircleGrid`].  Dynamics:
//!
//! ```text
//!   xdot = -gamma * x + W * sigma(x) + sum_j u_j phi_j,
//! ```
//!
//! with a von Mises synaptic kernel `W`, a logistic firing rate `sigma`
//! applied pointwise, and a control acting through the truncated orthonormal
//! Fourier basis `phi_j` (constant channels: `G` is state-independent).  The
//! terminal cost penalizes the L2 tracking error against a bump-shaped
//! target profile.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{fourier_basis, CircleGrid, GridFunction, SpectralConvolution, TWO_PI};
use crate::systems::special::{bessel_i0, sigma, sigma_prime, vonmises_kernel};
use crate::systems::{ControlAffineSystem, ControlVector, StateVector};

/// Parameters of the neural-field model and its tracking objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmariParams {
    /// Linear decay rate `gamma`.
    pub gamma: f64,
    /// Logistic slope `beta`.
    pub beta: f64,
    /// Firing threshold `vartheta`.
    pub vartheta: f64,
    /// Synaptic kernel concentration `kappa`.
    pub kappa: f64,
    /// Fourier cutoff `K`; the control has `m = 2K + 1` channels.
    pub k: usize,
    /// Target bump amplitude `A_d` (also the target's total mass).
    pub a_d: f64,
    /// Target bump concentration `kappa_d`.
    pub kappa_d: f64,
    /// Target bump center `theta_star` (radians).
    pub theta_star: f64,
    /// Control energy weight `alpha`.
    pub alpha: f64,
    /// Control bound `R` (radius of the admissible ball in `R^m`).
    pub r: f64,
}

impl Default for AmariParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            beta: 2.0,
            vartheta: 0.5,
            kappa: 4.0,
            k: 3,
            a_d: 0.8,
            kappa_d: 6.0,
            theta_star: PI / 3.0,
            alpha: 0.1,
            r: 1e3,
        }
    }
}

impl AmariParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("kappa", self.kappa),
            ("kappa_d", self.kappa_d),
            ("A_d", self.a_d),
            ("R", self.r),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha must be nonnegative and finite, got {}",
                self.alpha
            )));
        }
        if !self.vartheta.is_finite() || !self.theta_star.is_finite() {
            return Err(Error::InvalidConfig(
                "vartheta and theta_star must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Target profile `N_des(theta) = A_d exp(kappa_d cos(theta - theta_star))
/// / (2 pi I0(kappa_d))` — a normalized von Mises bump scaled to mass `A_d`.
pub fn amari_target(params: &AmariParams, grid: CircleGrid) -> Result<GridFunction> {
    let i0 = bessel_i0(params.kappa_d)?;
    let norm = params.a_d / (TWO_PI * i0);
    let (kd, ts) = (params.kappa_d, params.theta_star);
    Ok(GridFunction::from_fn(grid, |t| {
        (kd * (t - ts).cos()).exp() * norm
    }))
}

/// Drift `f(x) = -gamma x + W * sigma(x)` with the kernel supplied in
/// precomputed spectral form.
pub fn amari_drift(
    x: &GridFunction,
    params: &AmariParams,
    conv: &SpectralConvolution,
) -> Result<GridFunction> {
    let fired = x.map(|v| sigma(v, params.beta, params.vartheta));
    let mut out = conv.apply(&fired)?;
    for (o, xv) in out.values_mut().iter_mut().zip(x.values()) {
        *o -= params.gamma * xv;
    }
    Ok(out)
}

/// Adjoint drift Jacobian `Df(x)' p = -gamma p + sigma'(x) .* (W * p)`.
///
/// The von Mises kernel is even, so the convolution operator is
/// self-adjoint in L2 and only the pointwise `sigma'` factor moves from the
/// inside to the outside of the convolution.
pub fn amari_drift_jacobian_adjoint(
    x: &GridFunction,
    p: &GridFunction,
    params: &AmariParams,
    conv: &SpectralConvolution,
) -> Result<GridFunction> {
    let mut wp = conv.apply(p)?;
    for ((o, xv), pv) in wp.values_mut().iter_mut().zip(x.values()).zip(p.values()) {
        *o = sigma_prime(*xv, params.beta, params.vartheta) * *o - params.gamma * pv;
    }
    Ok(wp)
}

/// Terminal tracking cost `l(x) = 1/2 integral (x - N_des)^2 dtheta`.
pub fn amari_terminal_cost(x: &GridFunction, target: &GridFunction) -> f64 {
    let h = x.grid().spacing();
    let sum: f64 = x
        .values()
        .iter()
        .zip(target.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    0.5 * h * sum
}

/// Gradient of the tracking cost, `Dl(x) = x - N_des`, identified with a
/// grid function through the L2 pairing.
pub fn amari_terminal_cost_gradient(x: &GridFunction, target: &GridFunction) -> GridFunction {
    let mut g = x.clone();
    g.scaled_add(-1.0, target);
    g
}

/// The assembled neural-field control system.
#[derive(Debug, Clone)]
pub struct AmariSystem {
    params: AmariParams,
    grid: CircleGrid,
    conv: SpectralConvolution,
    basis: Vec<GridFunction>,
    target: GridFunction,
    drift_enabled: bool,
}

impl AmariSystem {
    pub fn new(params: AmariParams, grid: CircleGrid) -> Result<Self> {
        params.validate()?;
        let kernel = vonmises_kernel(params.kappa, grid)?;
        let conv = SpectralConvolution::new(&kernel);
        let basis = fourier_basis(grid, params.k)?;
        let target = amari_target(&params, grid)?;
        Ok(Self {
            params,
            grid,
            conv,
            basis,
            target,
            drift_enabled: true,
        })
    }

    /// Test hook: replace the drift by zero while keeping cost and control
    /// structure.  With `x0 = N_des` and no control the terminal tracking
    /// error is then exactly zero, which pins the data path end to end.
    pub fn with_drift_disabled(mut self) -> Self {
        self.drift_enabled = false;
        self
    }

    pub fn params(&self) -> &AmariParams {
        &self.params
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn target(&self) -> &GridFunction {
        &self.target
    }

    pub fn basis(&self) -> &[GridFunction] {
        &self.basis
    }
}

impl ControlAffineSystem for AmariSystem {
    type State = GridFunction;

    fn control_dim(&self) -> usize {
        self.basis.len()
    }

    fn control_bound(&self) -> f64 {
        self.params.r
    }

    fn energy_weight(&self) -> f64 {
        self.params.alpha
    }

    fn drift(&self, _t: f64, x: &GridFunction) -> GridFunction {
        if !self.drift_enabled {
            return x.zeros_like();
        }
        amari_drift(x, &self.params, &self.conv).expect("state shares the system grid")
    }

    fn control_apply(&self, _t: f64, x: &GridFunction, u: &ControlVector) -> GridFunction {
        debug_assert_eq!(u.len(), self.basis.len());
        let mut out = GridFunction::zeros(x.grid());
        for (uj, phi) in u.0.iter().zip(&self.basis) {
            if *uj != 0.0 {
                out.scaled_add(*uj, phi);
            }
        }
        out
    }

    fn control_adjoint(&self, _t: f64, _x: &GridFunction, p: &GridFunction) -> ControlVector {
        let h = self.grid.spacing();
        ControlVector(
            self.basis
                .iter()
                .map(|phi| {
                    h * phi
                        .values()
                        .iter()
                        .zip(p.values())
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .collect(),
        )
    }

    fn channels(&self, _t: f64, _x: &GridFunction) -> Vec<(ControlVector, GridFunction)> {
        let m = self.basis.len();
        self.basis
            .iter()
            .enumerate()
            .map(|(j, phi)| (ControlVector::unit(m, j), phi.clone()))
            .collect()
    }

    fn drift_jacobian_adjoint(&self, _t: f64, x: &GridFunction, p: &GridFunction) -> GridFunction {
        if !self.drift_enabled {
            return p.zeros_like();
        }
        amari_drift_jacobian_adjoint(x, p, &self.params, &self.conv)
            .expect("state shares the system grid")
    }

    fn terminal_cost(&self, x: &GridFunction) -> f64 {
        amari_terminal_cost(x, &self.target)
    }

    fn terminal_cost_gradient(&self, x: &GridFunction) -> GridFunction {
        amari_terminal_cost_gradient(x, &self.target)
    }

    fn inner(&self, a: &GridFunction, b: &GridFunction) -> f64 {
        let h = self.grid.spacing();
        h * a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x * y)
            .sum::<f64>()
    }
}

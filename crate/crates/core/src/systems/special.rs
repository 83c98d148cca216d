//! Scalar special functions for the neural-field model: the modified Bessel
//! function I0, the von Mises circular kernel, and the logistic activation.

use crate::error::{Error, Result};
use crate::spectral::{CircleGrid, GridFunction, TWO_PI};

/// Modified Bessel function of the first kind, order zero, via the even
/// power series `I0(kappa) = sum_k ((kappa/2)^(2k) / (k!)^2)`.
///
/// The series terminates once a term falls below `1e-16` of the running sum,
/// giving full double accuracy for the moderate arguments used here.  Kept
/// deliberately independent of the quadrature module so each can serve as
/// the other's test oracle.
pub fn bessel_i0(kappa: f64) -> Result<f64> {
    if kappa < 0.0 {
        return Err(Error::NegativeKappa { kappa });
    }
    let x = (kappa / 2.0) * (kappa / 2.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0f64;
    loop {
        term *= x / (k * k);
        sum += term;
        if term < 1e-16 * sum {
            break;
        }
        k += 1.0;
    }
    Ok(sum)
}

/// Von Mises kernel `W(theta) = exp(kappa cos theta) / (2 pi I0(kappa))`,
/// sampled on the grid.  Normalized so its circle integral is exactly 1.
pub fn vonmises_kernel(kappa: f64, grid: CircleGrid) -> Result<GridFunction> {
    let i0 = bessel_i0(kappa)?;
    let norm = 1.0 / (TWO_PI * i0);
    Ok(GridFunction::from_fn(grid, |t| {
        (kappa * t.cos()).exp() * norm
    }))
}

/// Logistic activation `sigma(q) = 1 / (1 + exp(-beta (q - vartheta)))`.
///
/// The exponent is clamped to `[-500, 500]`, which preserves the value to
/// machine precision in the representable range while avoiding overflow.
pub fn sigma(q: f64, beta: f64, vartheta: f64) -> f64 {
    let e = (-beta * (q - vartheta)).clamp(-500.0, 500.0);
    1.0 / (1.0 + e.exp())
}

/// Derivative `sigma'(q) = beta sigma(q) (1 - sigma(q))`.
pub fn sigma_prime(q: f64, beta: f64, vartheta: f64) -> f64 {
    let s = sigma(q, beta, vartheta);
    beta * s * (1.0 - s)
}

//! Function calculus on the circle.
//!
//! A uniform grid `theta_j = 2*pi*j/n`, rectangle-rule quadrature (which is
//! spectrally accurate for periodic integrands), FFT-based circular
//! convolution scaled to match the continuous convolution integral, and the
//! orthonormal Fourier basis used for the control channels.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Uniform grid of `n` nodes `theta_j = 2*pi*j/n` on the circle.
///
/// `n` must be at least 4 and even so that real DFT frequencies pair up
/// unambiguously.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircleGrid {
    n: usize,
}

impl CircleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid { n });
        }
        Ok(Self { n })
    }

    /// Number of grid nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Angle of node `j`.
    pub fn theta(&self, j: usize) -> f64 {
        TWO_PI * j as f64 / self.n as f64
    }

    /// Node spacing `2*pi/n` (also the rectangle-rule quadrature weight).
    pub fn spacing(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    /// Iterator over all node angles.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.theta(j))
    }
}

/// Real function on the circle, sampled at the nodes of a [`CircleGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: CircleGrid,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wrap explicit samples; rejects wrong length and non-finite entries.
    pub fn new(grid: CircleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(theta)` at the grid nodes.
    pub fn from_fn(grid: CircleGrid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().map(f).collect();
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { grid, values }
    }

    pub fn zeros(grid: CircleGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n()],
        }
    }

    pub fn constant(grid: CircleGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.n()],
        }
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Apply `f` to every sample value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.n(),
                got: other.grid.n(),
            });
        }
        Ok(())
    }
}

/// Rectangle-rule integral `(2*pi/n) * sum_j y(theta_j)`.
///
/// Exact (to roundoff) for trigonometric polynomials of degree below `n`,
/// hence spectrally accurate for smooth periodic integrands.
pub fn quadrature(y: &GridFunction) -> f64 {
    y.grid.spacing() * y.values.iter().sum::<f64>()
}

/// Forward DFT of the samples (unnormalized, rustfft convention).
pub fn dft(y: &GridFunction) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = y.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(y.grid.n()).process(&mut buf);
    buf
}

/// Inverse DFT scaled by `1/n`, so `idft(grid, dft(y)) == y`.
///
/// Returns the real part of the inverse transform as a grid function.
pub fn idft(grid: CircleGrid, spectrum: &[Complex<f64>]) -> Result<GridFunction> {
    if spectrum.len() != grid.n() {
        return Err(Error::GridMismatch {
            expected: grid.n(),
            got: spectrum.len(),
        });
    }
    let mut buf = spectrum.to_vec();
    FftPlanner::new().plan_fft_inverse(grid.n()).process(&mut buf);
    let scale = 1.0 / grid.n() as f64;
    GridFunction::new(grid, buf.iter().map(|c| c.re * scale).collect())
}

/// Circular convolution `(w * y)(theta) = integral w(theta - phi) y(phi) dphi`,
/// computed in spectral space and scaled by `2*pi/n` so the result matches
/// the continuous integral under the rectangle rule.
///
/// Plans the transforms on every call; hot paths should hold a
/// [`SpectralConvolution`] instead.
pub fn circular_convolution(w: &GridFunction, y: &GridFunction) -> Result<GridFunction> {
    w.check_same_grid(y)?;
    SpectralConvolution::new(w).apply(y)
}

/// Convolution against a fixed kernel with the kernel spectrum and FFT plans
/// precomputed.  The neural-field drift evaluates one convolution per RK4
/// stage, so this caching is what keeps time integration cheap.
#[derive(Clone)]
pub struct SpectralConvolution {
    grid: CircleGrid,
    /// Kernel DFT premultiplied by the full scaling `2*pi/n^2`
    /// (`2*pi/n` for the quadrature weight, `1/n` for the unnormalized
    /// inverse transform).
    kernel_hat: Vec<Complex<f64>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl SpectralConvolution {
    pub fn new(kernel: &GridFunction) -> Self {
        let n = kernel.grid().n();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let mut kernel_hat: Vec<Complex<f64>> = kernel
            .values()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        fft.process(&mut kernel_hat);
        let scale = TWO_PI / (n as f64 * n as f64);
        for c in kernel_hat.iter_mut() {
            *c *= scale;
        }
        Self {
            grid: kernel.grid(),
            kernel_hat,
            fft,
            ifft,
        }
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    /// `w * y` for the stored kernel `w`.
    pub fn apply(&self, y: &GridFunction) -> Result<GridFunction> {
        if y.grid() != self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.n(),
                got: y.grid().n(),
            });
        }
        let mut buf: Vec<Complex<f64>> =
            y.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= *k;
        }
        self.ifft.process(&mut buf);
        Ok(GridFunction {
            grid: self.grid,
            values: buf.iter().map(|c| c.re).collect(),
        })
    }
}

impl fmt::Debug for SpectralConvolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralConvolution")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

/// Orthonormal Fourier basis `[1/sqrt(2*pi), cos(k theta)/sqrt(pi),
/// sin(k theta)/sqrt(pi), ...]` for `k = 1..=cutoff`, in this fixed channel
/// order — `m = 2*cutoff + 1` functions in total.
///
/// Requires `2*cutoff < n/2` so the highest harmonic stays well below the
/// grid Nyquist frequency.
pub fn fourier_basis(grid: CircleGrid, cutoff: usize) -> Result<Vec<GridFunction>> {
    if 2 * cutoff >= grid.n() / 2 {
        return Err(Error::BasisUnresolvable {
            k: cutoff,
            n: grid.n(),
        });
    }
    let mut basis = Vec::with_capacity(2 * cutoff + 1);
    basis.push(GridFunction::constant(grid, 1.0 / TWO_PI.sqrt()));
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    for k in 1..=cutoff {
        let kf = k as f64;
        basis.push(GridFunction::from_fn(grid, |t| (kf * t).cos() * inv_sqrt_pi));
        basis.push(GridFunction::from_fn(grid, |t| (kf * t).sin() * inv_sqrt_pi));
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct O(n^2) quadrature of the convolution integral — the
    /// independent oracle for the FFT path.
    fn direct_convolution(w: &GridFunction, y: &GridFunction) -> GridFunction {
        let n = w.grid().n();
        let h = w.grid().spacing();
        let values = (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for l in 0..n {
                    let diff = (n + j - l) % n;
                    acc += w.values()[diff] * y.values()[l];
                }
                acc * h
            })
            .collect();
        GridFunction::new(w.grid(), values).unwrap()
    }

    fn max_abs_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(matches!(CircleGrid::new(3), Err(Error::InvalidGrid { n: 3 })));
        assert!(matches!(CircleGrid::new(7), Err(Error::InvalidGrid { n: 7 })));
        assert!(matches!(CircleGrid::new(0), Err(Error::InvalidGrid { n: 0 })));
        assert!(CircleGrid::new(4).is_ok());
    }

    #[test]
    fn grid_nodes_are_uniform() {
        let grid = CircleGrid::new(10).unwrap();
        for j in 0..9 {
            let gap = grid.theta(j + 1) - grid.theta(j);
            assert!((gap - grid.spacing()).abs() < 1e-15);
        }
        assert_eq!(grid.theta(0), 0.0);
    }

    #[test]
    fn grid_function_validates_inputs() {
        let grid = CircleGrid::new(8).unwrap();
        assert!(GridFunction::new(grid, vec![0.0; 7]).is_err());
        assert!(GridFunction::new(grid, vec![f64::NAN; 8]).is_err());
        assert!(GridFunction::new(grid, vec![1.0; 8]).is_ok());
    }

    #[test]
    fn quadrature_of_constant_is_two_pi() {
        let grid = CircleGrid::new(8).unwrap();
        let one = GridFunction::constant(grid, 1.0);
        assert!((quadrature(&one) - TWO_PI).abs() < 1e-14);
    }

    #[test]
    fn quadrature_kills_pure_harmonic() {
        let grid = CircleGrid::new(8).unwrap();
        let y = GridFunction::from_fn(grid, f64::cos);
        assert!(quadrature(&y).abs() < 1e-14);
    }

    #[test]
    fn quadrature_of_cos_squared_is_pi() {
        let grid = CircleGrid::new(8).unwrap();
        let y = GridFunction::from_fn(grid, |t| t.cos().powi(2));
        assert!((quadrature(&y) - PI).abs() < 1e-12 * PI);
    }

    #[test]
    fn dft_round_trip_is_identity() {
        let grid = CircleGrid::new(32).unwrap();
        let y = GridFunction::from_fn(grid, |t| (2.0 * t).sin() + 0.3 * (5.0 * t).cos() - 1.7);
        let back = idft(grid, &dft(&y)).unwrap();
        assert!(max_abs_diff(&y, &back) < 1e-12);
    }

    #[test]
    fn convolution_of_mass_one_kernel_with_constant() {
        let grid = CircleGrid::new(64).unwrap();
        // Hand-normalized kernel (1 + cos theta)/(2 pi) has unit mass.
        let w = GridFunction::from_fn(grid, |t| (1.0 + t.cos()) / TWO_PI);
        assert!((quadrature(&w) - 1.0).abs() < 1e-14);
        let y = GridFunction::constant(grid, 3.25);
        let conv = circular_convolution(&w, &y).unwrap();
        for &v in conv.values() {
            assert!((v - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_kernel_annihilates_harmonics() {
        let grid = CircleGrid::new(32).unwrap();
        let w = GridFunction::constant(grid, 1.0 / TWO_PI);
        let y = GridFunction::from_fn(grid, f64::cos);
        let conv = circular_convolution(&w, &y).unwrap();
        for &v in conv.values() {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn convolution_matches_direct_quadrature() {
        let grid = CircleGrid::new(48).unwrap();
        let w = GridFunction::from_fn(grid, |t| (t.cos()).exp());
        let y = GridFunction::from_fn(grid, |t| (3.0 * t).sin() + 0.5 * t.cos() + 2.0);
        let fast = circular_convolution(&w, &y).unwrap();
        let direct = direct_convolution(&w, &y);
        let scale = direct
            .values()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        assert!(max_abs_diff(&fast, &direct) / scale < 1e-10);
    }

    #[test]
    fn convolution_rejects_grid_mismatch() {
        let a = GridFunction::constant(CircleGrid::new(8).unwrap(), 1.0);
        let b = GridFunction::constant(CircleGrid::new(16).unwrap(), 1.0);
        assert!(matches!(
            circular_convolution(&a, &b),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn cached_convolution_matches_one_shot() {
        let grid = CircleGrid::new(32).unwrap();
        let w = GridFunction::from_fn(grid, |t| 1.0 + 0.5 * t.sin());
        let y = GridFunction::from_fn(grid, |t| (2.0 * t).cos());
        let cached = SpectralConvolution::new(&w);
        let a = cached.apply(&y).unwrap();
        let b = circular_convolution(&w, &y).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn fourier_basis_k0_is_constant() {
        let grid = CircleGrid::new(16).unwrap();
        let basis = fourier_basis(grid, 0).unwrap();
        assert_eq!(basis.len(), 1);
        for &v in basis[0].values() {
            assert!((v - 1.0 / TWO_PI.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn fourier_basis_is_orthonormal() {
        let grid = CircleGrid::new(256).unwrap();
        let basis = fourier_basis(grid, 3).unwrap();
        assert_eq!(basis.len(), 7);
        for (i, phi_i) in basis.iter().enumerate() {
            for (j, phi_j) in basis.iter().enumerate() {
                let prod = GridFunction::new(
                    grid,
                    phi_i
                        .values()
                        .iter()
                        .zip(phi_j.values())
                        .map(|(a, b)| a * b)
                        .collect(),
                )
                .unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (quadrature(&prod) - expected).abs() < 1e-12,
                    "pair ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn fourier_basis_rejects_unresolvable_cutoff() {
        let grid = CircleGrid::new(16).unwrap();
        // 2K < n/2 requires K <= 3 here.
        assert!(fourier_basis(grid, 3).is_ok());
        assert!(matches!(
            fourier_basis(grid, 4),
            Err(Error::BasisUnresolvable { k: 4, n: 16 })
        ));
    }

    proptest! {
        /// Rectangle rule integrates trig polynomials of degree < n exactly:
        /// only the mean survives.
        #[test]
        fn quadrature_exact_on_trig_polynomials(
            a0 in -5.0f64..5.0,
            coeffs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..12),
        ) {
            let grid = CircleGrid::new(32).unwrap();
            let y = GridFunction::from_fn(grid, |t| {
                let mut acc = a0;
                for (k, (a, b)) in coeffs.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    acc += a * (kf * t).cos() + b * (kf * t).sin();
                }
                acc
            });
            let exact = TWO_PI * a0;
            let scale = exact.abs().max(1.0);
            prop_assert!((quadrature(&y) - exact).abs() <= 1e-12 * scale);
        }

        /// Convolution is linear in the second argument.
        #[test]
        fn convolution_is_bilinear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let grid = CircleGrid::new(32).unwrap();
            let w = GridFunction::from_fn(grid, |t| (t.cos()).exp());
            let y1 = GridFunction::from_fn(grid, |t| (2.0 * t).sin());
            let y2 = GridFunction::from_fn(grid, |t| 1.0 / (2.0 + t.cos()));
            let combo = GridFunction::new(
                grid,
                y1.values().iter().zip(y2.values()).map(|(p, q)| a * p + b * q).collect(),
            ).unwrap();
            let lhs = circular_convolution(&w, &combo).unwrap();
            let c1 = circular_convolution(&w, &y1).unwrap();
            let c2 = circular_convolution(&w, &y2).unwrap();
            let rhs = GridFunction::new(
                grid,
                c1.values().iter().zip(c2.values()).map(|(p, q)| a * p + b * q).collect(),
            ).unwrap();
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-11);
        }

        /// Rotating the input by one node rotates the output by one node.
        #[test]
        fn convolution_is_shift_equivariant(shift in 1usize..31) {
            let grid = CircleGrid::new(32).unwrap();
            let w = GridFunction::from_fn(grid, |t| (t.cos()).exp());
            let y = GridFunction::from_fn(grid, |t| (3.0 * t).sin() + 0.25 * t.cos());
            let n = grid.n();
            let rot = |g: &GridFunction| {
                GridFunction::new(
                    grid,
                    (0..n).map(|j| g.values()[(n + j - shift) % n]).collect(),
                ).unwrap()
            };
            let lhs = circular_convolution(&w, &rot(&y)).unwrap();
            let rhs = rot(&circular_convolution(&w, &y).unwrap());
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-11);
        }
    }
}

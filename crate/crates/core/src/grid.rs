//! Uniform periodic mesh on `[-L, L)` and the spectral operators built on it.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;

use crate::fft::FftPlan;
use crate::{Error, Result};

/// Periodic grid with `n` nodes `x_j = -L + j*dx`, `dx = 2L/n`.
///
/// Cloning is cheap: the FFT plan and wavenumber table are shared.
#[derive(Clone)]
pub struct Grid {
    half_length: f64,
    n: usize,
    dx: f64,
    spectral: Arc<Spectral>,
}

struct Spectral {
    plan: FftPlan,
    /// Angular wavenumber of each FFT bin; the Nyquist bin carries `-π/dx`.
    wavenumbers: Vec<f64>,
    /// Integer mode index of each bin, in `[-n/2, n/2)`.
    modes: Vec<i64>,
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Grid> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidGrid("L must be a positive finite number"));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid("N must be even"));
        }
        if n < 16 {
            return Err(Error::InvalidGrid("N must be at least 16"));
        }
        let dx = 2.0 * half_length / n as f64;
        let modes: Vec<i64> = (0..n)
            .map(|j| if j < n / 2 { j as i64 } else { j as i64 - n as i64 })
            .collect();
        let base = PI / half_length;
        let wavenumbers = modes.iter().map(|&m| base * m as f64).collect();
        Ok(Grid {
            half_length,
            n,
            dx,
            spectral: Arc::new(Spectral {
                plan: FftPlan::new(n),
                wavenumbers,
                modes,
            }),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Index of the node at `x = 0`.
    pub fn center_index(&self) -> usize {
        self.n / 2
    }

    /// Mirror index of `j` about `x = 0`.
    pub fn reflect(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.spectral.wavenumbers
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.spectral.plan.forward(&mut buf);
        buf
    }

    pub(crate) fn inverse(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.spectral.plan.inverse(&mut coeffs);
        coeffs.into_iter().map(|z| z.re).collect()
    }

    /// Multiplies every Fourier mode by `symbol(k, mode_index)` and returns
    /// to physical space.
    pub(crate) fn apply_symbol<F>(&self, values: &[f64], symbol: F) -> Vec<f64>
    where
        F: Fn(f64, i64) -> Complex64,
    {
        let mut coeffs = self.forward(values);
        for ((c, &k), &m) in coeffs
            .iter_mut()
            .zip(&self.spectral.wavenumbers)
            .zip(&self.spectral.modes)
        {
            *c *= symbol(k, m);
        }
        self.inverse(coeffs)
    }

    /// Spectral derivative of a raw sample vector; `order` must be 1..=4.
    pub(crate) fn deriv_values(&self, values: &[f64], order: u8) -> Vec<f64> {
        let nyquist = -(self.n as i64) / 2;
        let odd = order % 2 == 1;
        self.apply_symbol(values, |k, m| {
            if odd && m == nyquist {
                return Complex64::new(0.0, 0.0);
            }
            match order {
                1 => Complex64::new(0.0, k),
                2 => Complex64::new(-k * k, 0.0),
                3 => Complex64::new(0.0, -k * k * k),
                _ => Complex64::new(k * k * k * k, 0.0),
            }
        })
    }

    /// Zeroes every mode with `|m| > n/3` (the two-thirds rule).
    pub(crate) fn dealias_values(&self, values: &[f64]) -> Vec<f64> {
        let cutoff = (self.n / 3) as i64;
        self.apply_symbol(values, |_, m| {
            if m.abs() > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Fourier pseudo-spectral derivative of order 1 to 4.
    ///
    /// The Nyquist coefficient is dropped for odd orders so that the result
    /// stays real.
    pub fn deriv(&self, f: &Field, order: u8) -> Result<Field> {
        if !(1..=4).contains(&order) {
            return Err(Error::InvalidDerivativeOrder(order));
        }
        self.check(f)?;
        Ok(Field::from_parts(self.clone(), self.deriv_values(&f.values, order)))
    }

    /// Rectangle rule, which is exact for trigonometric polynomials below
    /// the Nyquist mode.
    pub fn integrate(&self, f: &Field) -> f64 {
        self.integrate_values(&f.values)
    }

    pub(crate) fn integrate_values(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.dx
    }

    pub fn norms(&self, f: &Field) -> Norms {
        norms_of(&f.values, self.dx)
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.grid != *self {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

pub(crate) fn norms_of(values: &[f64], dx: f64) -> Norms {
    let l2 = libm::sqrt(values.iter().map(|v| v * v).sum::<f64>() * dx);
    let linf = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Norms { l2, linf, min }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half_length == other.half_length
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .field("dx", &self.dx)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    pub min: f64,
}

/// Real samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(j));
        }
        Ok(Field::from_parts(grid.clone(), values))
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: &Grid, c: f64) -> Field {
        Field::from_parts(grid.clone(), alloc::vec![c; grid.len()])
    }

    pub fn zeros(grid: &Grid) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a*self + b*other`; both fields must share a grid.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Field::from_parts(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }
}

//! Nonlocal operators: the interaction average `⟨f⟩ = Γ * f` and the
//! periodic heat-kernel mollifier `J_ε`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::grid::{Field, Grid};
use crate::{Error, Result};

/// An even, nonnegative interaction kernel on the periodic cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    l1_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    /// Indicator of `[-half_width, half_width]`.
    Box { half_width: f64 },
    /// Node samples of `Γ`, symmetrized on construction.
    Sampled(Field),
}

impl KernelSpec {
    /// Characteristic function of `[-half_width, half_width]`.
    pub fn boxed(half_width: f64) -> Result<KernelSpec> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        Ok(KernelSpec {
            kind: KernelKind::Box { half_width },
            l1_norm: 2.0 * half_width,
        })
    }

    /// Kernel given by its values at the grid nodes. The samples are
    /// replaced by `(Γ(x) + Γ(-x))/2`.
    pub fn sampled(samples: Field) -> Result<KernelSpec> {
        if let Some(j) = samples.values().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidKernel(format!(
                "kernel sample {j} is negative ({})",
                samples.values()[j]
            )));
        }
        let grid = samples.grid().clone();
        let v = samples.values();
        let sym: Vec<f64> = (0..grid.len())
            .map(|j| 0.5 * (v[j] + v[grid.reflect(j)]))
            .collect();
        let field = Field::from_parts(grid.clone(), sym);
        let l1_norm = grid.integrate(&field);
        Ok(KernelSpec {
            kind: KernelKind::Sampled(field),
            l1_norm,
        })
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    /// `‖Γ‖_{L¹}`; exactly `2ε` for a box of half-width `ε`.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// Fourier multiplier of the kernel on `grid`, one entry per FFT bin.
    pub fn symbol(&self, grid: &Grid) -> Result<Vec<f64>> {
        match &self.kind {
            KernelKind::Box { half_width } => {
                let eps = *half_width;
                if eps >= grid.half_length() {
                    return Err(Error::InvalidKernel(format!(
                        "box half-width {eps} must be smaller than L = {}",
                        grid.half_length()
                    )));
                }
                Ok(grid
                    .wavenumbers()
                    .iter()
                    .map(|&k| {
                        if k == 0.0 {
                            2.0 * eps
                        } else {
                            2.0 * libm::sin(k * eps) / k
                        }
                    })
                    .collect())
            }
            KernelKind::Sampled(samples) => {
                if samples.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                // move the x = 0 sample to index 0
                let n = grid.len();
                let centered: Vec<f64> = (0..n)
                    .map(|m| samples.values()[(m + n / 2) % n])
                    .collect();
                let dx = grid.dx();
                Ok(grid.forward(&centered).iter().map(|c| c.re * dx).collect())
            }
        }
    }

    /// Periodic convolution `Γ * f`, evaluated mode by mode.
    pub fn convolve(&self, f: &Field) -> Result<Field> {
        let grid = f.grid();
        let symbol = self.symbol(grid)?;
        Ok(Field::from_parts(grid.clone(), convolve_values(grid, &symbol, f.values())))
    }
}

pub(crate) fn convolve_values(grid: &Grid, symbol: &[f64], values: &[f64]) -> Vec<f64> {
    let mut coeffs = grid.forward(values);
    for (c, s) in coeffs.iter_mut().zip(symbol) {
        *c *= *s;
    }
    grid.inverse(coeffs)
}

/// `J_ε f`: multiplies Fourier mode `k` by `exp(-ε k²)`. `ε = 0` returns
/// `f` unchanged.
pub fn mollify(f: &Field, eps: f64) -> Result<Field> {
    if !(eps >= 0.0) {
        return Err(Error::NegativeMollifierTime(eps));
    }
    if eps == 0.0 {
        return Ok(f.clone());
    }
    Ok(Field::from_parts(f.grid().clone(), mollify_values(f.grid(), f.values(), eps)))
}

pub(crate) fn mollify_values(grid: &Grid, values: &[f64], eps: f64) -> Vec<f64> {
    if eps == 0.0 {
        return values.to_vec();
    }
    grid.apply_symbol(values, |k, _| Complex64::new(libm::exp(-eps * k * k), 0.0))
}

/// Free-function form of [`KernelSpec::l1_norm`].
pub fn kernel_l1_norm(k: &KernelSpec) -> f64 {
    k.l1_norm()
}

//! Closed-form initial profiles sampled at the grid nodes.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::grid::{Field, Grid};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// `amp·(x−a)^p·x^q·(x−b)^r` on `[a, b]`, zero elsewhere.
    PolyBump {
        amp: f64,
        a: f64,
        b: f64,
        p: u32,
        q: u32,
        r: u32,
    },
    Constant { c: f64 },
    /// `mean + amp·cos(mode·πx/L)`
    Cosine { mean: f64, amp: f64, mode: u32 },
    /// Explicit node values, one per grid node.
    Samples(Vec<f64>),
}

fn powu(x: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

impl InitialProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialProfile::PolyBump { amp, a, b, .. } => {
                if !(a < b) {
                    return Err(Error::InvalidInitialData(format!(
                        "poly_bump needs a < b, got a = {a}, b = {b}"
                    )));
                }
                if !(amp.is_finite() && a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidInitialData("poly_bump coefficients must be finite".into()));
                }
            }
            InitialProfile::Constant { c } if !c.is_finite() => {
                return Err(Error::InvalidInitialData("constant must be finite".into()));
            }
            InitialProfile::Cosine { mean, amp, .. } if !(mean.is_finite() && amp.is_finite()) => {
                return Err(Error::InvalidInitialData("cosine coefficients must be finite".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Value at a single point; `Samples` has no pointwise meaning and
    /// yields `None`.
    pub fn eval(&self, x: f64, half_length: f64) -> Option<f64> {
        Some(match *self {
            InitialProfile::PolyBump { amp, a, b, p, q, r } => {
                if x < a || x > b {
                    0.0
                } else {
                    amp * powu(x - a, p) * powu(x, q) * powu(x - b, r)
                }
            }
            InitialProfile::Constant { c } => c,
            InitialProfile::Cosine { mean, amp, mode } => {
                mean + amp * libm::cos(mode as f64 * PI * x / half_length)
            }
            InitialProfile::Samples(_) => return None,
        })
    }

    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        self.validate()?;
        let field = match self {
            InitialProfile::Samples(v) => Field::new(grid, v.clone()),
            _ => {
                let l = grid.half_length();
                Field::from_fn(grid, |x| self.eval(x, l).unwrap_or(0.0))
            }
        };
        field.map_err(|e| Error::InvalidInitialData(format!("{e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_bump_values() {
        let fig2 = InitialProfile::PolyBump { amp: -140.0, a: -0.5, b: 0.5, p: 3, q: 0, r: 3 };
        assert!((fig2.eval(0.0, 1.0).unwrap() - 2.1875).abs() < 1e-14);
        assert_eq!(fig2.eval(0.6, 1.0).unwrap(), 0.0);
        assert_eq!(fig2.eval(-0.5, 1.0).unwrap(), 0.0);
        let fig1 = InitialProfile::PolyBump { amp: -2000.0, a: -0.5, b: 0.5, p: 3, q: 2, r: 3 };
        assert_eq!(fig1.eval(0.0, 1.0).unwrap(), 0.0);
        let g = Grid::new(1.0, 64).unwrap();
        let f = fig1.sample(&g).unwrap();
        assert!(f.min() >= 0.0);
        // -2000 x^2 (x^2 - 1/4)^3 peaks at x^2 = 1/16
        let peak = 2000.0 / 16.0 * (3.0f64 / 16.0) * (3.0 / 16.0) * (3.0 / 16.0);
        assert!((f.max() - peak).abs() < 1e-12);
    }

    #[test]
    fn other_profiles() {
        let g = Grid::new(1.0, 16).unwrap();
        let c = InitialProfile::Constant { c: 0.7 }.sample(&g).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.7));
        let cos = InitialProfile::Cosine { mean: 1.0, amp: 0.1, mode: 1 }.sample(&g).unwrap();
        assert!((cos.values()[0] - 0.9).abs() < 1e-15);
        assert!((cos.values()[8] - 1.1).abs() < 1e-15);
        let s = InitialProfile::Samples(alloc::vec![1.0; 16]).sample(&g).unwrap();
        assert_eq!(s.values().len(), 16);
        assert!(InitialProfile::Samples(alloc::vec![1.0; 15]).sample(&g).is_err());
        let bad = InitialProfile::PolyBump { amp: 1.0, a: 0.5, b: -0.5, p: 1, q: 0, r: 1 };
        assert!(bad.sample(&g).is_err());
    }
}

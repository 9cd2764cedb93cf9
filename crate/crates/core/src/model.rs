//! Evolution laws of the area/density system, its mollified variant, the
//! square-root form, the energy functionals and the analytic bounds.
//!
//! With `⟨ρ⟩ = Γ * ρ` the system reads
//!
//! ```text
//! ∂t A = A(αρ − μα(ρ − ⟨ρ⟩)) + β̃A(1 − ρA/K̃) + ∂x(ρ ∂x A)
//! ∂t ρ = βρ(1 − Aρ/K) − αρ² + μαρ(ρ − ⟨ρ⟩) + ∂x(ρ ∂x ρ)
//! ```
//!
//! on a periodic cell. Both transport terms are degenerate where `ρ = 0`.

use alloc::format;
use alloc::vec::Vec;

use crate::grid::{norms_of, Field, Grid};
use crate::kernel::{convolve_values, mollify_values, KernelSpec};
use crate::{Error, Result};

/// Model constants. `k` and `k_tilde` are the density and area carrying
/// capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub mu: f64,
    pub beta: f64,
    pub beta_tilde: f64,
    pub k: f64,
    pub k_tilde: f64,
    pub kernel: KernelSpec,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.mu, self.beta, self.beta_tilde, self.k, self.k_tilde]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        let checks = [
            (self.alpha > 0.0, "alpha must be positive"),
            ((0.0..1.0).contains(&self.mu), "mu must satisfy 0 <= mu < 1"),
            (self.beta > 0.0, "beta must be positive"),
            (self.beta_tilde >= 0.0, "beta_tilde must be nonnegative"),
            (self.k > 0.0, "K must be positive"),
            (self.k_tilde > 0.0, "K_tilde must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidParams((*msg).into())),
            None => Ok(()),
        }
    }
}

/// How the transport terms `∂x(D ∂x u)` are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxScheme {
    /// Three-point conservative flux with face diffusivity `(D_j + D_{j+1})/2`;
    /// reaction products are formed from nodal values. Nodes whose
    /// neighbours all vanish receive no flux, so zero sets are kept exactly.
    #[default]
    Conservative,
    /// Fourier pseudo-spectral flux; every factor of a product is truncated
    /// by the two-thirds rule before it is formed.
    Spectral,
}

/// Time together with the area `A` and density `ρ` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub a: Field,
    pub rho: Field,
}

impl State {
    pub fn new(t: f64, a: Field, rho: Field) -> Result<State> {
        if a.grid() != rho.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(State { t, a, rho })
    }

    pub fn grid(&self) -> &Grid {
        self.a.grid()
    }
}

/// Energy functionals of a state, with the derivative order fixed at `m = 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `1 + ‖∂³ρ‖² + ‖ρ‖² + ‖A‖² + ‖∂²A‖²`
    pub e_tilde: f64,
    /// `e_tilde + ‖1/ρ‖∞ + ‖1/A‖∞`; `+∞` once either field touches zero.
    pub e_full: f64,
    /// `1 + ‖√ρ‖² + ‖∂²√ρ‖²`
    pub e_sqrt: f64,
}

/// Reusable right-hand-side evaluator: caches the kernel symbol.
#[derive(Debug, Clone)]
pub struct Rhs {
    grid: Grid,
    params: ModelParams,
    scheme: FluxScheme,
    symbol: Vec<f64>,
}

fn check_finite(values: &[f64], term: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteTerm { term })
    }
}

/// `∂x(D ∂x u)` with face-averaged diffusivity.
fn conservative_flux(d: &[f64], u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    let inv = 1.0 / (dx * dx);
    let face = |j: usize| {
        let k = (j + 1) % n;
        0.5 * (d[j] + d[k]) * (u[k] - u[j])
    };
    (0..n)
        .map(|j| (face(j) - face((j + n - 1) % n)) * inv)
        .collect()
}

fn central_difference(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|j| (u[(j + 1) % n] - u[(j + n - 1) % n]) / (2.0 * dx))
        .collect()
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

impl Rhs {
    pub fn new(grid: &Grid, params: &ModelParams, scheme: FluxScheme) -> Result<Rhs> {
        params.validate()?;
        let symbol = params.kernel.symbol(grid)?;
        Ok(Rhs {
            grid: grid.clone(),
            params: params.clone(),
            scheme,
            symbol,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> FluxScheme {
        self.scheme
    }

    pub(crate) fn average(&self, values: &[f64]) -> Vec<f64> {
        convolve_values(&self.grid, &self.symbol, values)
    }

    fn spectral_flux(&self, d: &[f64], u: &[f64]) -> Vec<f64> {
        let du = self.grid.deriv_values(u, 1);
        self.grid.deriv_values(&mul(d, &du), 1)
    }

    fn flux(&self, d: &[f64], u: &[f64]) -> Vec<f64> {
        match self.scheme {
            FluxScheme::Conservative => conservative_flux(d, u, self.grid.dx()),
            FluxScheme::Spectral => self.spectral_flux(d, u),
        }
    }

    fn factors(&self, a: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self.scheme {
            FluxScheme::Conservative => (a.to_vec(), u.to_vec()),
            FluxScheme::Spectral => (self.grid.dealias_values(a), self.grid.dealias_values(u)),
        }
    }

    /// Reaction parts of `(∂t A, ∂t ρ)`, i.e. everything but the fluxes.
    pub fn reactions(&self, a: &[f64], rho: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (at, rt) = self.factors(a, rho);
        let avg = self.average(rho);
        check_finite(&avg, "nonlocal average")?;
        Ok(self.reactions_from(&at, &rt, &avg))
    }

    fn reactions_from(&self, at: &[f64], rt: &[f64], avg: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = &self.params;
        let ra = at
            .iter()
            .zip(rt)
            .zip(avg)
            .map(|((&a, &r), &m)| {
                a * (p.alpha * r - p.mu * p.alpha * (r - m))
                    + p.beta_tilde * a * (1.0 - r * a / p.k_tilde)
            })
            .collect();
        let rr = at
            .iter()
            .zip(rt)
            .zip(avg)
            .map(|((&a, &r), &m)| {
                p.beta * r * (1.0 - a * r / p.k) - p.alpha * r * r + p.mu * p.alpha * r * (r - m)
            })
            .collect();
        (ra, rr)
    }

    /// Right-hand side of the original system on raw node values.
    pub fn eval(&self, a: &[f64], rho: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (at, rt) = self.factors(a, rho);
        let avg = self.average(rho);
        check_finite(&avg, "nonlocal average")?;
        let (mut da, mut dr) = self.reactions_from(&at, &rt, &avg);
        check_finite(&da, "A reaction")?;
        check_finite(&dr, "rho reaction")?;
        let fa = self.flux(&rt, &at);
        check_finite(&fa, "A flux")?;
        let fr = self.flux(&rt, &rt);
        check_finite(&fr, "rho flux")?;
        for (d, f) in da.iter_mut().zip(&fa) {
            *d += f;
        }
        for (d, f) in dr.iter_mut().zip(&fr) {
            *d += f;
        }
        Ok((da, dr))
    }

    /// Mollified system: every `A`, `ρ` replaced by `J_ε A`, `J_ε ρ` and the
    /// whole right side wrapped in one more `J_ε`.
    pub fn eval_regularized(&self, a: &[f64], rho: &[f64], eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(eps >= 0.0) {
            return Err(Error::NegativeMollifierTime(eps));
        }
        if eps == 0.0 {
            return self.eval(a, rho);
        }
        let ja = mollify_values(&self.grid, a, eps);
        let jr = mollify_values(&self.grid, rho, eps);
        let (da, dr) = self.eval(&ja, &jr)?;
        Ok((
            mollify_values(&self.grid, &da, eps),
            mollify_values(&self.grid, &dr, eps),
        ))
    }

    /// Right-hand side in the variables `(A, η)` with `η = √ρ`.
    ///
    /// ```text
    /// ∂t η = (η/2)[β − (β/K)Aη² − αη² + αμ(η² − ⟨η²⟩)] + η(∂x η)² + ∂x(η² ∂x η)
    /// ∂t A = αA((1−μ)η² + μ⟨η²⟩) + β̃A(1 − Aη²/K̃) + ∂x(η² ∂x A)
    /// ```
    pub fn eval_sqrt(&self, a: &[f64], eta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = &self.params;
        let (at, et) = self.factors(a, eta);
        let rho_nodal = mul(eta, eta);
        let avg = self.average(&rho_nodal);
        check_finite(&avg, "nonlocal average")?;
        let e2 = mul(&et, &et);

        let mut da: Vec<f64> = at
            .iter()
            .zip(&e2)
            .zip(&avg)
            .map(|((&a, &r), &m)| {
                p.alpha * a * ((1.0 - p.mu) * r + p.mu * m)
                    + p.beta_tilde * a * (1.0 - a * r / p.k_tilde)
            })
            .collect();
        let mut de: Vec<f64> = at
            .iter()
            .zip(&et)
            .zip(&e2)
            .zip(&avg)
            .map(|(((&a, &e), &r), &m)| {
                0.5 * e
                    * (p.beta - p.beta / p.k * a * r - p.alpha * r + p.alpha * p.mu * (r - m))
            })
            .collect();
        check_finite(&da, "A reaction")?;
        check_finite(&de, "eta reaction")?;

        let grad = match self.scheme {
            FluxScheme::Conservative => central_difference(&et, self.grid.dx()),
            FluxScheme::Spectral => self.grid.deriv_values(&et, 1),
        };
        let fa = self.flux(&e2, &at);
        check_finite(&fa, "A flux")?;
        let fe = self.flux(&e2, &et);
        check_finite(&fe, "eta flux")?;
        for (d, f) in da.iter_mut().zip(&fa) {
            *d += f;
        }
        for (((d, f), &e), &g) in de.iter_mut().zip(&fe).zip(&et).zip(&grad) {
            *d += f + e * g * g;
        }
        check_finite(&de, "eta transport")?;
        Ok((da, de))
    }

    fn check_state(&self, s: &State) -> Result<()> {
        if s.a.grid() != &self.grid || s.rho.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn wrap(&self, (da, dr): (Vec<f64>, Vec<f64>)) -> (Field, Field) {
        (
            Field::from_parts(self.grid.clone(), da),
            Field::from_parts(self.grid.clone(), dr),
        )
    }
}

/// `(∂t A, ∂t ρ)` of the original system.
pub fn rhs(s: &State, p: &ModelParams, scheme: FluxScheme) -> Result<(Field, Field)> {
    let r = Rhs::new(s.grid(), p, scheme)?;
    r.check_state(s)?;
    Ok(r.wrap(r.eval(s.a.values(), s.rho.values())?))
}

/// `(∂t A, ∂t ρ)` of the mollified system at mollifier time `eps`.
pub fn rhs_regularized(
    s: &State,
    p: &ModelParams,
    eps: f64,
    scheme: FluxScheme,
) -> Result<(Field, Field)> {
    let r = Rhs::new(s.grid(), p, scheme)?;
    r.check_state(s)?;
    Ok(r.wrap(r.eval_regularized(s.a.values(), s.rho.values(), eps)?))
}

/// `(∂t A, ∂t η)` of the square-root form. `t` is carried for symmetry
/// with the other forms; the system is autonomous.
pub fn rhs_sqrt(
    _t: f64,
    a: &Field,
    eta: &Field,
    p: &ModelParams,
    scheme: FluxScheme,
) -> Result<(Field, Field)> {
    if a.grid() != eta.grid() {
        return Err(Error::GridMismatch);
    }
    let r = Rhs::new(a.grid(), p, scheme)?;
    Ok(r.wrap(r.eval_sqrt(a.values(), eta.values())?))
}

/// Energies with `m = 3`.
pub fn energy(s: &State) -> EnergyReport {
    let g = s.grid();
    energy_values(g, s.a.values(), s.rho.values())
}

pub(crate) fn energy_values(g: &Grid, a: &[f64], rho: &[f64]) -> EnergyReport {
    let dx = g.dx();
    let sq = |v: &[f64]| {
        let l2 = norms_of(v, dx).l2;
        l2 * l2
    };
    let e_tilde = 1.0
        + sq(&g.deriv_values(rho, 3))
        + sq(rho)
        + sq(a)
        + sq(&g.deriv_values(a, 2));
    let inv_sup = |v: &[f64]| {
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            1.0 / min
        } else {
            f64::INFINITY
        }
    };
    let e_full = e_tilde + inv_sup(rho) + inv_sup(a);
    let root: Vec<f64> = rho.iter().map(|&r| libm::sqrt(r.max(0.0))).collect();
    let e_sqrt = 1.0 + sq(&root) + sq(&g.deriv_values(&root, 2));
    EnergyReport {
        e_tilde,
        e_full,
        e_sqrt,
    }
}

fn check_mu(p: &ModelParams) -> Result<()> {
    if !(p.mu < 1.0) {
        return Err(Error::InvalidParams(format!(
            "mu must satisfy 0 <= mu < 1, got {}",
            p.mu
        )));
    }
    Ok(())
}

/// Central curvature above which blow-up at `x = 0` is forced:
/// `μ β ‖Γ‖₁ / (1 − μ)`.
pub fn blowup_threshold(p: &ModelParams) -> Result<f64> {
    check_mu(p)?;
    Ok(p.mu * p.beta * p.kernel.l1_norm() / (1.0 - p.mu))
}

/// Upper bound for `‖ρ(t)‖∞`: `max(‖ρ₀‖∞, β / (α(1 − μ)))`.
pub fn linf_density_bound(p: &ModelParams, rho0_max: f64) -> Result<f64> {
    check_mu(p)?;
    Ok(rho0_max.max(p.beta / (p.alpha * (1.0 - p.mu))))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    pub(crate) fn reference_params() -> ModelParams {
        ModelParams {
            alpha: 1.0,
            mu: 0.5,
            beta: 0.75,
            beta_tilde: 0.5,
            k: 1.0,
            k_tilde: 0.5,
            kernel: KernelSpec::boxed(0.05).unwrap(),
        }
    }

    const SCHEMES: [FluxScheme; 2] = [FluxScheme::Conservative, FluxScheme::Spectral];

    fn constant_state(g: &Grid, a: f64, r: f64) -> State {
        State::new(0.0, Field::constant(g, a), Field::constant(g, r)).unwrap()
    }

    #[test]
    fn validation() {
        let mut p = reference_params();
        assert!(p.validate().is_ok());
        p.mu = 1.0;
        assert_eq!(
            p.validate().unwrap_err(),
            Error::InvalidParams("mu must satisfy 0 <= mu < 1".into())
        );
        p.mu = 0.0;
        p.alpha = 0.0;
        assert!(p.validate().is_err());
        p.alpha = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_state_is_equilibrium() {
        let g = Grid::new(1.0, 32).unwrap();
        for scheme in SCHEMES {
            let (da, dr) = rhs(&constant_state(&g, 0.0, 0.0), &reference_params(), scheme).unwrap();
            assert!(da.values().iter().chain(dr.values()).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_state_values() {
        let g = Grid::new(1.0, 64).unwrap();
        let s = constant_state(&g, 1.0, 1.0);
        for scheme in SCHEMES {
            let (da, dr) = rhs(&s, &reference_params(), scheme).unwrap();
            assert!(da.values().iter().all(|v| (v - 0.05).abs() < 1e-12), "{scheme:?}");
            assert!(dr.values().iter().all(|v| (v + 0.55).abs() < 1e-12), "{scheme:?}");
            for eps in [0.0, 1e-3, 0.05] {
                let (da, dr) = rhs_regularized(&s, &reference_params(), eps, scheme).unwrap();
                assert!(da.values().iter().all(|v| (v - 0.05).abs() < 1e-12));
                assert!(dr.values().iter().all(|v| (v + 0.55).abs() < 1e-12));
            }
            let (da, de) =
                rhs_sqrt(0.0, &s.a, &Field::constant(&g, 1.0), &reference_params(), scheme).unwrap();
            assert!(da.values().iter().all(|v| (v - 0.05).abs() < 1e-12));
            assert!(de.values().iter().all(|v| (v + 0.275).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_density_keeps_density_fixed() {
        let g = Grid::new(1.0, 64).unwrap();
        let a = Field::from_fn(&g, |x| 1.0 + 0.5 * libm::cos(PI * x)).unwrap();
        let s = State::new(0.0, a, Field::zeros(&g)).unwrap();
        for scheme in SCHEMES {
            let (_, dr) = rhs(&s, &reference_params(), scheme).unwrap();
            assert!(dr.values().iter().all(|&v| v == 0.0));
        }
        let (da, de) = rhs_sqrt(0.0, &Field::zeros(&g), &Field::zeros(&g), &reference_params(), FluxScheme::Spectral).unwrap();
        assert!(da.values().iter().chain(de.values()).all(|&v| v == 0.0));
    }

    #[test]
    fn even_inputs_give_even_outputs() {
        let g = Grid::new(1.0, 128).unwrap();
        let a = Field::from_fn(&g, |x| 1.0 + 0.3 * libm::cos(PI * x) + 0.1 * libm::cos(4.0 * PI * x)).unwrap();
        let r = Field::from_fn(&g, |x| libm::exp(-10.0 * x * x) + 0.2 * x * x).unwrap();
        let s = State::new(0.0, a.clone(), r.clone()).unwrap();
        let defect = |f: &Field| {
            (0..g.len())
                .map(|j| (f.values()[j] - f.values()[g.reflect(j)]).abs())
                .fold(0.0, f64::max)
        };
        for scheme in SCHEMES {
            let (da, dr) = rhs(&s, &reference_params(), scheme).unwrap();
            assert!(defect(&da) <= 1e-10 && defect(&dr) <= 1e-10);
            let eta = r.map(libm::sqrt);
            let (da, de) = rhs_sqrt(0.0, &a, &eta, &reference_params(), scheme).unwrap();
            assert!(defect(&da) <= 1e-10 && defect(&de) <= 1e-10);
        }
    }

    #[test]
    fn nonfinite_term_is_named() {
        let g = Grid::new(1.0, 32).unwrap();
        let mut p = reference_params();
        p.k_tilde = 1e-308;
        let s = constant_state(&g, 1e10, 1e10);
        let err = rhs(&s, &p, FluxScheme::Conservative).unwrap_err();
        assert!(matches!(err, Error::NonFiniteTerm { .. }), "{err:?}");
    }

    #[test]
    fn energy_of_constants() {
        let g = Grid::new(1.0, 32).unwrap();
        let e = energy(&constant_state(&g, 1.0, 1.0));
        assert!((e.e_tilde - 5.0).abs() < 1e-12);
        assert!((e.e_full - 7.0).abs() < 1e-12);
        assert!((e.e_sqrt - 3.0).abs() < 1e-12);
        let mut r = vec![1.0; 32];
        r[5] = 0.0;
        let s = State::new(0.0, Field::constant(&g, 1.0), Field::new(&g, r).unwrap()).unwrap();
        let e = energy(&s);
        assert_eq!(e.e_full, f64::INFINITY);
        assert!(e.e_tilde.is_finite() && e.e_tilde >= 1.0);
    }

    #[test]
    fn thresholds() {
        let p = reference_params();
        let theta = blowup_threshold(&p).unwrap();
        assert!((theta - 0.075).abs() <= 2.0 * f64::EPSILON * 0.075);
        let mut q = p.clone();
        q.mu = 0.0;
        assert_eq!(blowup_threshold(&q).unwrap(), 0.0);
        q.mu = 0.999;
        q.beta = 1.0;
        q.kernel = KernelSpec::boxed(0.5).unwrap();
        assert!((blowup_threshold(&q).unwrap() - 999.0).abs() < 1e-9);
        q.mu = 1.0;
        assert!(blowup_threshold(&q).is_err());
        assert!(linf_density_bound(&q, 0.3).is_err());

        assert_eq!(linf_density_bound(&p, 0.49).unwrap(), 1.5);
        assert_eq!(linf_density_bound(&p, 2.1875).unwrap(), 2.1875);
        let mut logistic = p.clone();
        logistic.mu = 0.0;
        logistic.beta = 1.0;
        assert_eq!(linf_density_bound(&logistic, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn regularized_at_zero_matches_original() {
        let g = Grid::new(1.0, 64).unwrap();
        let a = Field::from_fn(&g, |x| 0.5 + 0.2 * libm::sin(PI * x)).unwrap();
        let r = Field::from_fn(&g, |x| 1.0 + 0.1 * libm::cos(2.0 * PI * x)).unwrap();
        let s = State::new(0.0, a, r).unwrap();
        for scheme in SCHEMES {
            let (a0, r0) = rhs(&s, &reference_params(), scheme).unwrap();
            let (a1, r1) = rhs_regularized(&s, &reference_params(), 0.0, scheme).unwrap();
            assert_eq!((a0, r0), (a1, r1));
        }
        assert!(rhs_regularized(&s, &reference_params(), -1.0, FluxScheme::Spectral).is_err());
    }
}

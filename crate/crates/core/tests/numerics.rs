use std::f64::consts::PI;

use xdiff_core::diagnostics::{blowup_comparison_ode, second_derivative_at_center, t_star};
use xdiff_core::integrator::{run, step_with};
use xdiff_core::model::{blowup_threshold, rhs, rhs_sqrt};
use xdiff_core::{
    Field, FluxScheme, Grid, HaltReason, InitialProfile, KernelSpec, Mode, ModelParams, RunSetup, State,
    StepControl,
};

fn reference_params() -> ModelParams {
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

fn smooth_state(g: &Grid) -> State {
    let rho = Field::from_fn(g, |x| 1.0 + 0.1 * (PI * x).cos()).unwrap();
    State::new(0.0, Field::constant(g, 1.0), rho).unwrap()
}

fn max_diff(a: &State, b: &State) -> f64 {
    a.rho
        .values()
        .iter()
        .zip(b.rho.values())
        .chain(a.a.values().iter().zip(b.a.values()))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn observed_order(scheme: FluxScheme) -> f64 {
    let g = Grid::new(1.0, 64).unwrap();
    let s0 = smooth_state(&g);
    let p = reference_params();
    let ctrl = StepControl::default();
    let solve = |m: usize| {
        let dt = 1e-3 / m as f64;
        let mut s = s0.clone();
        for _ in 0..m {
            s = step_with(&s, &p, dt, &ctrl, scheme, Mode::Original).unwrap();
        }
        s
    };
    let (u1, u2, u4) = (solve(2), solve(4), solve(8));
    (max_diff(&u1, &u2) / max_diff(&u2, &u4)).log2()
}

#[test]
fn rk4_self_convergence() {
    for scheme in [FluxScheme::Conservative, FluxScheme::Spectral] {
        let order = observed_order(scheme);
        assert!(order >= 3.5, "{scheme:?}: observed order {order}");
    }
}

/// `max |2η ∂tη − ∂tρ| / max |∂tρ|` on the smooth positive datum.
fn sqrt_mismatch(n: usize, scheme: FluxScheme) -> f64 {
    let g = Grid::new(1.0, n).unwrap();
    let s = smooth_state(&g);
    let eta = s.rho.map(f64::sqrt);
    let (_, dr) = rhs(&s, &reference_params(), scheme).unwrap();
    let (da_sqrt, de) = rhs_sqrt(0.0, &s.a, &eta, &reference_params(), scheme).unwrap();
    let (da, _) = rhs(&s, &reference_params(), scheme).unwrap();
    let scale = dr.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rho_err = eta
        .values()
        .iter()
        .zip(de.values())
        .zip(dr.values())
        .map(|((e, d), r)| (2.0 * e * d - r).abs())
        .fold(0.0, f64::max);
    let a_err = da
        .values()
        .iter()
        .zip(da_sqrt.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    (rho_err / scale).max(a_err / scale)
}

#[test]
fn sqrt_form_matches_density_form() {
    assert!(sqrt_mismatch(256, FluxScheme::Spectral) <= 1e-6);
    assert!(sqrt_mismatch(1024, FluxScheme::Conservative) <= 1e-6);
}

#[test]
fn comparison_ode_against_numerical_integration() {
    let theta = blowup_threshold(&reference_params()).unwrap();
    let y0 = 62.5;
    let ts = t_star(y0, theta);
    assert!((ts - 1.6009607686918e-2).abs() < 1e-12);

    // RK4 on y' = y² − θy until y passes 1e9
    let f = |y: f64| y * y - theta * y;
    let h = ts * 1e-6;
    let (mut t, mut y) = (0.0, y0);
    let mut checked = false;
    while y < 1e9 {
        if !checked && t >= 0.5 * ts {
            let exact = blowup_comparison_ode(y0, theta, t);
            assert!((y - exact).abs() <= 1e-8 * exact);
            checked = true;
        }
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    assert!(checked);
    assert!((t - ts).abs() <= 0.01 * ts, "numerical blow-up at {t}, closed form {ts}");
}

#[test]
fn central_curvature_examples() {
    let g = Grid::new(1.0, 1024).unwrap();
    let fig1 = InitialProfile::PolyBump { amp: -2000.0, a: -0.5, b: 0.5, p: 3, q: 2, r: 3 };
    let rho = fig1.sample(&g).unwrap();
    let s = State::new(0.0, Field::zeros(&g), rho).unwrap();
    assert!((second_derivative_at_center(&s) - 62.5).abs() <= 0.625);

    // x² on [-1/2, 1/2] periodized smoothly by a C^∞ bump-free quartic blend
    let g = Grid::new(1.0, 256).unwrap();
    let rho = Field::from_fn(&g, |x| 1.0 - (PI * x).cos()).unwrap();
    let s = State::new(0.0, Field::zeros(&g), rho).unwrap();
    // 1 − cos(πx) = π²x²/2 + O(x⁴): curvature π² at the centre
    assert!((second_derivative_at_center(&s) - PI * PI).abs() < 1e-10);

    let s = State::new(0.0, Field::zeros(&g), Field::constant(&g, 3.0)).unwrap();
    assert!(second_derivative_at_center(&s).abs() < 1e-12);
}

#[test]
fn constant_positive_run_stays_above_area_envelope() {
    use xdiff_core::diagnostics::{min_area_constant, min_area_envelope_check};
    let g = Grid::new(1.0, 32).unwrap();
    let p = reference_params();
    let setup = RunSetup {
        params: p.clone(),
        scheme: FluxScheme::Conservative,
        mode: Mode::Original,
        a0: Field::constant(&g, 1.0),
        rho0: Field::constant(&g, 1.0),
        t_end: 0.5,
        record_every: 10,
        snapshot_times: vec![],
        ctrl: StepControl::default(),
    };
    let out = run(&setup).unwrap();
    assert_eq!(out.halt_reason, HaltReason::ReachedTEnd);
    let c = min_area_constant(&out.series, p.beta_tilde, p.k_tilde);
    let check = min_area_envelope_check(&out.series, c);
    assert!(check.holds && !check.vacuous);
}

#[test]
fn runs_are_deterministic() {
    let g = Grid::new(1.0, 128).unwrap();
    let setup = RunSetup {
        params: reference_params(),
        scheme: FluxScheme::Conservative,
        mode: Mode::Original,
        a0: InitialProfile::PolyBump { amp: -2000.0, a: -0.3, b: 0.3, p: 3, q: 0, r: 3 }
            .sample(&g)
            .unwrap(),
        rho0: InitialProfile::PolyBump { amp: -140.0, a: -0.5, b: 0.5, p: 3, q: 0, r: 3 }
            .sample(&g)
            .unwrap(),
        t_end: 2e-3,
        record_every: 3,
        snapshot_times: vec![1e-3],
        ctrl: StepControl::default(),
    };
    let a = run(&setup).unwrap();
    let b = run(&setup).unwrap();
    assert_eq!(a.series, b.series);
    assert_eq!(a.final_state, b.final_state);
}

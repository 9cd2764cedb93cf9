//! Explicit RK4 time stepping with a diffusive step bound, the positivity
//! policy and the halt logic.

use alloc::format;
use alloc::vec::Vec;

use crate::diagnostics::{curvature_monotone_tail, default_threshold, DiagnosticRecord, DiagnosticSeries};
use crate::grid::{Field, Grid};
use crate::kernel::mollify_values;
use crate::model::{FluxScheme, ModelParams, Rhs, State};
use crate::{Error, Result};

/// What happens to negative entries after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClipPolicy {
    /// Set every negative entry to zero and account for the removed mass.
    #[default]
    ClipToZero,
    /// Fail on entries below `-positivity_tol`; smaller negatives are zeroed.
    Reject,
}

impl ClipPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ClipPolicy::ClipToZero => "clip_to_zero",
            ClipPolicy::Reject => "reject",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub positivity_tol: f64,
    pub clip_policy: ClipPolicy,
    /// Halt once `ρ_xx(t, 0)` exceeds this.
    pub blowup_cap: f64,
    /// Halt once `ρ_xx(t, 0)` exceeds this multiple of its initial value
    /// while rising over the last `monotone_window` records. Only armed
    /// when the initial value is positive.
    pub curvature_growth_factor: f64,
    pub monotone_window: usize,
    /// Largest total clipped mass, relative to the initial `∫(ρ + A)`,
    /// before the run is declared faulty.
    pub max_clipped_fraction: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl_safety: 0.25,
            dt_min: 1e-14,
            dt_max: 1e-3,
            positivity_tol: 1e-12,
            clip_policy: ClipPolicy::ClipToZero,
            blowup_cap: 1e6,
            curvature_growth_factor: 10.0,
            monotone_window: 50,
            max_clipped_fraction: 1e-8,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidControl(m.into()));
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must satisfy 0 < cfl_safety <= 1");
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max && self.dt_max.is_finite()) {
            return bad("need 0 < dt_min < dt_max < inf");
        }
        if !(self.positivity_tol >= 0.0) {
            return bad("positivity_tol must be nonnegative");
        }
        if !(self.blowup_cap > 0.0) {
            return bad("blowup_cap must be positive");
        }
        if !(self.curvature_growth_factor > 1.0) {
            return bad("curvature_growth_factor must exceed 1");
        }
        if self.monotone_window < 2 {
            return bad("monotone_window must be at least 2");
        }
        if !(self.max_clipped_fraction >= 0.0) {
            return bad("max_clipped_fraction must be nonnegative");
        }
        Ok(())
    }
}

/// Which form of the system is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Mode {
    #[default]
    Original,
    /// Mollified system started from `(J_ε(δ + A₀), J_ε(δ + ρ₀))`.
    Regularized { eps: f64, delta: f64 },
    /// Integrates `(A, √ρ)`.
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    ReachedTEnd,
    BlowupDetected,
    DtUnderflow,
    NumericalFault,
}

impl HaltReason {
    pub fn as_str(self) -> &'static str {
        match self {
            HaltReason::ReachedTEnd => "reached_t_end",
            HaltReason::BlowupDetected => "blowup_detected",
            HaltReason::DtUnderflow => "dt_underflow",
            HaltReason::NumericalFault => "numerical_fault",
        }
    }
}

/// Saved `(t, A, ρ)`.
pub type Snapshot = State;

/// Everything a run needs, already validated piecewise.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub params: ModelParams,
    pub scheme: FluxScheme,
    pub mode: Mode,
    pub a0: Field,
    pub rho0: Field,
    pub t_end: f64,
    pub record_every: usize,
    pub snapshot_times: Vec<f64>,
    pub ctrl: StepControl,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub halt_reason: HaltReason,
    pub final_state: State,
    pub series: DiagnosticSeries,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub clipped_mass: f64,
    /// Set when `halt_reason` is `NumericalFault`.
    pub fault: Option<Error>,
}

fn raw_dt(grid: &Grid, rho_max: f64, ctrl: &StepControl) -> f64 {
    ctrl.cfl_safety * grid.dx() * grid.dx() / rho_max.max(1e-12)
}

/// `clamp(σ dx² / max(max ρ, 1e-12), dt_min, dt_max)`. `ρ` is the
/// diffusivity of both equations.
pub fn cfl_dt(s: &State, ctrl: &StepControl) -> f64 {
    raw_dt(s.grid(), s.rho.max(), ctrl).clamp(ctrl.dt_min, ctrl.dt_max)
}

/// Right-hand side in the integrated variables `(A, v)`, where `v` is `ρ`
/// or `√ρ` depending on the mode.
struct Stepper {
    rhs: Rhs,
    mode: Mode,
}

impl Stepper {
    fn new(grid: &Grid, params: &ModelParams, scheme: FluxScheme, mode: Mode) -> Result<Stepper> {
        if let Mode::Regularized { eps, delta } = mode {
            if !(eps >= 0.0) || !eps.is_finite() {
                return Err(Error::NegativeMollifierTime(eps));
            }
            if !(delta >= 0.0) || !delta.is_finite() {
                return Err(Error::InvalidSetup(format!("delta must be nonnegative, got {delta}")));
            }
        }
        Ok(Stepper {
            rhs: Rhs::new(grid, params, scheme)?,
            mode,
        })
    }

    fn eval(&self, a: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.mode {
            Mode::Original => self.rhs.eval(a, v),
            Mode::Regularized { eps, .. } => self.rhs.eval_regularized(a, v, eps),
            Mode::Sqrt => self.rhs.eval_sqrt(a, v),
        }
    }

    fn to_vars(&self, rho: &[f64]) -> Vec<f64> {
        match self.mode {
            Mode::Sqrt => rho.iter().map(|&r| libm::sqrt(r.max(0.0))).collect(),
            _ => rho.to_vec(),
        }
    }

    fn to_density(&self, v: &[f64]) -> Vec<f64> {
        match self.mode {
            Mode::Sqrt => v.iter().map(|&e| e * e).collect(),
            _ => v.to_vec(),
        }
    }

    /// One classical RK4 step in place; returns the mass removed by the
    /// positivity policy.
    fn rk4(&self, a: &mut [f64], v: &mut [f64], dt: f64, ctrl: &StepControl) -> Result<f64> {
        let stage = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> {
            base.iter().zip(k).map(|(b, k)| b + h * k).collect()
        };
        let (ka1, kv1) = self.eval(a, v)?;
        let (ka2, kv2) = self.eval(&stage(a, &ka1, 0.5 * dt), &stage(v, &kv1, 0.5 * dt))?;
        let (ka3, kv3) = self.eval(&stage(a, &ka2, 0.5 * dt), &stage(v, &kv2, 0.5 * dt))?;
        let (ka4, kv4) = self.eval(&stage(a, &ka3, dt), &stage(v, &kv3, dt))?;
        let combine = |u: &mut [f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| {
            for j in 0..u.len() {
                u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        };
        combine(a, &ka1, &ka2, &ka3, &ka4);
        combine(v, &kv1, &kv2, &kv3, &kv4);
        if let Some(j) = a.iter().chain(v.iter()).position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue(j % a.len()));
        }
        let dx = self.rhs.grid().dx();
        let sqrt = matches!(self.mode, Mode::Sqrt);
        let mut clipped = clip(a, "A", ctrl, |x| -x * dx)?;
        clipped += clip(v, "rho", ctrl, |x| if sqrt { x * x * dx } else { -x * dx })?;
        Ok(clipped)
    }
}

fn clip(u: &mut [f64], field: &'static str, ctrl: &StepControl, mass: impl Fn(f64) -> f64) -> Result<f64> {
    let mut removed = 0.0;
    for (index, x) in u.iter_mut().enumerate() {
        if *x < 0.0 {
            if ctrl.clip_policy == ClipPolicy::Reject && *x < -ctrl.positivity_tol {
                return Err(Error::NegativeValue { field, index, value: *x });
            }
            removed += mass(*x);
            *x = 0.0;
        }
    }
    Ok(removed)
}

/// One RK4 step of the original system with the default flux scheme,
/// followed by the positivity policy.
pub fn step(s: &State, p: &ModelParams, dt: f64, ctrl: &StepControl) -> Result<State> {
    step_with(s, p, dt, ctrl, FluxScheme::default(), Mode::Original)
}

/// [`step`] with an explicit flux scheme and run mode.
pub fn step_with(
    s: &State,
    p: &ModelParams,
    dt: f64,
    ctrl: &StepControl,
    scheme: FluxScheme,
    mode: Mode,
) -> Result<State> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidSetup(format!("dt must be positive, got {dt}")));
    }
    let grid = s.grid().clone();
    let stepper = Stepper::new(&grid, p, scheme, mode)?;
    let mut a = s.a.values().to_vec();
    let mut v = stepper.to_vars(s.rho.values());
    stepper.rk4(&mut a, &mut v, dt, ctrl)?;
    let rho = stepper.to_density(&v);
    State::new(s.t + dt, Field::from_parts(grid.clone(), a), Field::from_parts(grid, rho))
}

impl RunSetup {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.ctrl.validate()?;
        if self.a0.grid() != self.rho0.grid() {
            return Err(Error::GridMismatch);
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidSetup(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidSetup("record_every must be at least 1".into()));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_end)) {
            return Err(Error::InvalidSetup(format!("snapshot time {t} lies outside [0, t_end]")));
        }
        Ok(())
    }

    /// Starting `(A, ρ)` after the mode's data transform.
    pub fn initial_state(&self) -> Result<State> {
        let grid = self.rho0.grid();
        let (a, rho) = match self.mode {
            Mode::Regularized { eps, delta } => {
                let shift = |f: &Field| -> Vec<f64> {
                    let v: Vec<f64> = f.values().iter().map(|x| x + delta).collect();
                    mollify_values(grid, &v, eps)
                };
                (shift(&self.a0), shift(&self.rho0))
            }
            _ => (self.a0.values().to_vec(), self.rho0.values().to_vec()),
        };
        for (name, v) in [("A", &a), ("rho", &rho)] {
            if let Some(x) = v.iter().find(|x| **x < 0.0) {
                return Err(Error::InvalidInitialData(format!("{name} has a negative value {x:e}")));
            }
        }
        State::new(0.0, Field::from_parts(grid.clone(), a), Field::from_parts(grid.clone(), rho))
    }
}

/// Nodes where `ρ₀` vanishes and both neighbours vanish too.
fn interior_zero_nodes(rho0: &[f64]) -> Vec<usize> {
    let n = rho0.len();
    let th = default_threshold(rho0);
    let zero = |j: usize| rho0[j] <= th;
    (0..n)
        .filter(|&j| zero(j) && zero((j + 1) % n) && zero((j + n - 1) % n))
        .collect()
}

struct Recorder<'a> {
    grid: &'a Grid,
    zero_nodes: Vec<usize>,
    series: DiagnosticSeries,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, a: &[f64], rho: &[f64], clipped: f64) {
        if self.series.records.last().is_some_and(|r| r.t >= t) {
            return;
        }
        let mut r = DiagnosticRecord::capture(self.grid, t, a, rho);
        r.clipped_mass = clipped;
        r.zero_set_leak = if self.zero_nodes.is_empty() {
            None
        } else {
            Some(self.zero_nodes.iter().map(|&j| rho[j]).fold(f64::NEG_INFINITY, f64::max))
        };
        self.series.records.push(r);
    }
}

/// Advances the setup to `t_end` or to the first halt condition.
///
/// Configuration problems are returned as `Err`; numerical trouble during
/// the run ends it with `HaltReason::NumericalFault` and the last good
/// state.
pub fn run(setup: &RunSetup) -> Result<RunOutcome> {
    setup.validate()?;
    let grid = setup.rho0.grid().clone();
    let ctrl = &setup.ctrl;
    let stepper = Stepper::new(&grid, &setup.params, setup.scheme, setup.mode)?;
    let start = setup.initial_state()?;

    let mut a = start.a.values().to_vec();
    let mut rho = start.rho.values().to_vec();
    let mut v = stepper.to_vars(&rho);
    let mut t = 0.0;
    let mass0 = grid.integrate_values(&a) + grid.integrate_values(&rho);
    let clip_limit = ctrl.max_clipped_fraction * mass0;

    let mut rec = Recorder {
        grid: &grid,
        zero_nodes: interior_zero_nodes(&rho),
        series: DiagnosticSeries {
            half_length: grid.half_length(),
            dx: grid.dx(),
            records: Vec::new(),
        },
    };
    rec.push(0.0, &a, &rho, 0.0);
    let y0 = rec.series.records[0].rho_xx_at_0;
    let growth_armed = y0 > 0.0;

    let mut pending: Vec<f64> = setup.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.dedup();
    let mut snapshots = Vec::new();
    let snap = |t: f64, a: &[f64], rho: &[f64]| State {
        t,
        a: Field::from_parts(grid.clone(), a.to_vec()),
        rho: Field::from_parts(grid.clone(), rho.to_vec()),
    };
    while pending.first() == Some(&0.0) {
        snapshots.push(snap(0.0, &a, &rho));
        pending.remove(0);
    }

    let mut steps = 0usize;
    let mut clipped = 0.0;
    let mut at_floor = 0u32;
    let mut fault = None;
    let halt = loop {
        if t >= setup.t_end {
            break HaltReason::ReachedTEnd;
        }
        let max_rho = rho.iter().copied().fold(0.0, f64::max);
        let raw = raw_dt(&grid, max_rho, ctrl);
        if raw <= ctrl.dt_min {
            at_floor += 1;
            if at_floor >= 2 {
                break HaltReason::DtUnderflow;
            }
        } else {
            at_floor = 0;
        }
        let mut dt = raw.clamp(ctrl.dt_min, ctrl.dt_max);
        let target = pending.first().copied().unwrap_or(setup.t_end).min(setup.t_end);
        let lands = t + dt >= target;
        if lands {
            dt = target - t;
        }

        let (mut a_new, mut v_new) = (a.clone(), v.clone());
        match stepper.rk4(&mut a_new, &mut v_new, dt, ctrl) {
            Ok(c) => clipped += c,
            Err(e) => {
                fault = Some(e);
                break HaltReason::NumericalFault;
            }
        }
        a = a_new;
        v = v_new;
        rho = stepper.to_density(&v);
        t = if lands { target } else { t + dt };
        steps += 1;

        if clipped > clip_limit {
            fault = Some(Error::ExcessiveClipping { clipped, limit: clip_limit });
            break HaltReason::NumericalFault;
        }
        while pending.first().is_some_and(|&s| s <= t) {
            snapshots.push(snap(t, &a, &rho));
            pending.remove(0);
        }
        if steps.is_multiple_of(setup.record_every) {
            rec.push(t, &a, &rho, clipped);
        }

        let curvature = grid.deriv_values(&rho, 2)[grid.center_index()];
        if curvature > ctrl.blowup_cap {
            break HaltReason::BlowupDetected;
        }
        if growth_armed
            && curvature > ctrl.curvature_growth_factor * y0
            && curvature_monotone_tail(&rec.series.records, ctrl.monotone_window)
        {
            break HaltReason::BlowupDetected;
        }
    };
    rec.push(t, &a, &rho, clipped);

    Ok(RunOutcome {
        halt_reason: halt,
        final_state: snap(t, &a, &rho),
        series: rec.series,
        snapshots,
        steps,
        clipped_mass: clipped,
        fault,
    })
}

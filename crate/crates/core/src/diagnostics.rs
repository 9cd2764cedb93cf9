//! Measurable counterparts of the analytical results: central curvature,
//! supports, `L∞` envelopes, symmetry, the minimum-area envelope and the
//! scalar comparison ODE that bounds the blow-up time from above.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::grid::{Field, Grid};
use crate::model::{energy_values, State};

/// Closed interval `[lo, hi]`. An interval that wraps across the periodic
/// seam is stored unwrapped, so `hi` may exceed `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `self ⊆ other` after widening `other` by `slack` on each side.
    pub fn within(&self, other: &Interval, slack: f64) -> bool {
        self.lo >= other.lo - slack && self.hi <= other.hi + slack
    }
}

/// One row of the diagnostic time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub max_rho: f64,
    pub min_rho: f64,
    pub min_a: f64,
    pub max_a: f64,
    pub rho_xx_at_0: f64,
    pub supp_rho: Vec<Interval>,
    pub supp_a: Vec<Interval>,
    pub mass_rho: f64,
    pub mass_a: f64,
    pub e_tilde: f64,
    pub e_sqrt: f64,
    pub symmetry_defect_rho: f64,
    /// Mass removed by the positivity policy since `t = 0`.
    pub clipped_mass: f64,
    /// Largest `ρ` over the zero nodes of `ρ₀` that are not next to its
    /// support; `None` when there are no such nodes.
    pub zero_set_leak: Option<f64>,
}

impl DiagnosticRecord {
    /// Everything that can be read off `(t, A, ρ)`; the run-level fields
    /// (`clipped_mass`, `zero_set_leak`) start empty.
    pub fn capture(grid: &Grid, t: f64, a: &[f64], rho: &[f64]) -> DiagnosticRecord {
        let energies = energy_values(grid, a, rho);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        DiagnosticRecord {
            t,
            max_rho: max(rho),
            min_rho: min(rho),
            min_a: min(a),
            max_a: max(a),
            rho_xx_at_0: grid.deriv_values(rho, 2)[grid.center_index()],
            supp_rho: support_values(grid, rho, default_threshold(rho)),
            supp_a: support_values(grid, a, default_threshold(a)),
            mass_rho: grid.integrate_values(rho),
            mass_a: grid.integrate_values(a),
            e_tilde: energies.e_tilde,
            e_sqrt: energies.e_sqrt,
            symmetry_defect_rho: symmetry_defect_values(grid, rho),
            clipped_mass: 0.0,
            zero_set_leak: None,
        }
    }
}

/// Records of one run plus the mesh data needed to interpret supports.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    pub half_length: f64,
    pub dx: f64,
    pub records: Vec<DiagnosticRecord>,
}

/// `∂x²ρ` at the `x = 0` node.
pub fn second_derivative_at_center(s: &State) -> f64 {
    let g = s.grid();
    g.deriv_values(s.rho.values(), 2)[g.center_index()]
}

/// `1e-9 · max(max f, 1)`
pub fn default_threshold(values: &[f64]) -> f64 {
    1e-9 * values.iter().copied().fold(1.0, f64::max)
}

/// Maximal runs of nodes with `f > threshold`, as closed intervals padded
/// by half a cell, merged across the periodic seam.
pub fn support(f: &Field, threshold: Option<f64>) -> Vec<Interval> {
    let th = threshold.unwrap_or_else(|| default_threshold(f.values()));
    support_values(f.grid(), f.values(), th)
}

pub(crate) fn support_values(grid: &Grid, values: &[f64], threshold: f64) -> Vec<Interval> {
    let n = values.len();
    let inside: Vec<bool> = values.iter().map(|&v| v > threshold).collect();
    if inside.iter().all(|&b| b) {
        return alloc::vec![Interval {
            lo: -grid.half_length(),
            hi: grid.half_length(),
        }];
    }
    let half = 0.5 * grid.dx();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut j = 0;
    while j < n {
        if inside[j] {
            let start = j;
            while j + 1 < n && inside[j + 1] {
                j += 1;
            }
            runs.push((start, j));
        }
        j += 1;
    }
    let mut out: Vec<Interval> = Vec::with_capacity(runs.len());
    let wraps = runs.len() >= 2 && runs[0].0 == 0 && runs[runs.len() - 1].1 == n - 1;
    let (first, rest) = if wraps {
        let (s, _) = runs.pop().unwrap();
        let (_, e) = runs.remove(0);
        (
            Some(Interval {
                lo: grid.node(s) - half,
                hi: grid.node(e) + half + 2.0 * grid.half_length(),
            }),
            runs,
        )
    } else {
        (None, runs)
    };
    // a run that starts at the first node but does not wrap is cut at -L
    out.extend(rest.into_iter().map(|(s, e)| Interval {
        lo: (grid.node(s) - half).max(-grid.half_length()),
        hi: grid.node(e) + half,
    }));
    out.extend(first);
    out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    out
}

/// `max_j |f_j − f_{(N−j) mod N}|`
pub fn symmetry_defect(f: &Field) -> f64 {
    symmetry_defect_values(f.grid(), f.values())
}

pub(crate) fn symmetry_defect_values(grid: &Grid, values: &[f64]) -> f64 {
    (0..values.len())
        .map(|j| (values[j] - values[grid.reflect(j)]).abs())
        .fold(0.0, f64::max)
}

/// Solution of `y' = y² − θy`, `y(0) = y0`, at time `t`; `+∞` at or past
/// the blow-up time.
pub fn blowup_comparison_ode(y0: f64, theta: f64, t: f64) -> f64 {
    // y = θ y0 / (θ − (y0 − θ)(e^{θt} − 1)), which reduces to y0/(1 − y0 t) at θ = 0
    let (num, denom) = if theta == 0.0 {
        (y0, 1.0 - y0 * t)
    } else {
        (theta * y0, theta - (y0 - theta) * libm::expm1(theta * t))
    };
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    num / denom
}

/// Blow-up time of `y' = y² − θy`: `ln(y0/(y0 − θ))/θ`, `1/y0` at `θ = 0`,
/// `+∞` when `y0 ≤ θ`.
pub fn t_star(y0: f64, theta: f64) -> f64 {
    if !(y0 > theta) || y0 <= 0.0 {
        return f64::INFINITY;
    }
    if theta == 0.0 {
        return 1.0 / y0;
    }
    -libm::log1p(-theta / y0) / theta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInvariance {
    /// Largest displacement of either endpoint of `supp ρ` from its initial
    /// position, in cells.
    pub max_endpoint_drift_rho: f64,
    /// First record time with both endpoints of `supp A` within the
    /// tolerance of those of `supp ρ`.
    pub time_a_reaches_rho: Option<f64>,
    /// Largest distance, in cells, of the endpoints of `supp A` from those
    /// of `supp ρ₀` at or after `time_a_reaches_rho`.
    pub post_expansion_drift_a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportReport {
    Measured(SupportInvariance),
    /// Some record has an empty or multi-interval support.
    UnsupportedTopology { t: f64 },
}

pub fn support_invariance_report(series: &DiagnosticSeries, tol_dx_multiple: f64) -> SupportReport {
    let single = |v: &[Interval]| if v.len() == 1 { Some(v[0]) } else { None };
    let mut pairs = Vec::with_capacity(series.records.len());
    for r in &series.records {
        match (single(&r.supp_rho), single(&r.supp_a)) {
            (Some(sr), Some(sa)) => pairs.push((r.t, sr, sa)),
            _ => return SupportReport::UnsupportedTopology { t: r.t },
        }
    }
    let Some(&(_, rho0, _)) = pairs.first() else {
        return SupportReport::UnsupportedTopology { t: 0.0 };
    };
    let dx = series.dx;
    let gap = |a: &Interval, b: &Interval| (a.lo - b.lo).abs().max((a.hi - b.hi).abs()) / dx;
    let max_endpoint_drift_rho = pairs.iter().map(|(_, sr, _)| gap(sr, &rho0)).fold(0.0, f64::max);
    let reached = pairs
        .iter()
        .position(|(_, sr, sa)| gap(sa, sr) <= tol_dx_multiple + 1e-9);
    let (time_a_reaches_rho, post_expansion_drift_a) = match reached {
        Some(i) => (
            Some(pairs[i].0),
            Some(pairs[i..].iter().map(|(_, _, sa)| gap(sa, &rho0)).fold(0.0, f64::max)),
        ),
        None => (None, None),
    };
    SupportReport::Measured(SupportInvariance {
        max_endpoint_drift_rho,
        time_a_reaches_rho,
        post_expansion_drift_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvelopeCheck {
    pub holds: bool,
    /// `min A(0) ≤ 0`, so the bound says nothing.
    pub vacuous: bool,
}

/// `(β̃/K̃)·sup max A·sup max ρ` over the series.
pub fn min_area_constant(series: &DiagnosticSeries, beta_tilde: f64, k_tilde: f64) -> f64 {
    let sup_a = series.records.iter().map(|r| r.max_a).fold(0.0, f64::max);
    let sup_r = series.records.iter().map(|r| r.max_rho).fold(0.0, f64::max);
    beta_tilde / k_tilde * sup_a * sup_r
}

/// `min A(t) ≥ min A(0)·e^{−Ct} − 1e-10` at every record.
pub fn min_area_envelope_check(series: &DiagnosticSeries, c: f64) -> EnvelopeCheck {
    let Some(first) = series.records.first() else {
        return EnvelopeCheck { holds: true, vacuous: true };
    };
    let m0 = first.min_a;
    if !(m0 > 0.0) {
        return EnvelopeCheck { holds: true, vacuous: true };
    }
    let holds = series
        .records
        .iter()
        .all(|r| r.min_a >= m0 * libm::exp(-c * (r.t - first.t)) - 1e-10);
    EnvelopeCheck { holds, vacuous: false }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfEnvelope {
    /// `max_t max_rho(t) / max(max_rho(0), equilibrium)`
    pub worst_ratio: f64,
    /// Consecutive record pairs where `max_rho` exceeded the equilibrium and
    /// still grew.
    pub growth_violations: usize,
}

/// `L∞` envelope of the density against `max(max_rho(0), equilibrium)`,
/// where `equilibrium = β/(α(1−μ))`.
pub fn linf_envelope(series: &DiagnosticSeries, equilibrium: f64) -> LinfEnvelope {
    let Some(first) = series.records.first() else {
        return LinfEnvelope { worst_ratio: 0.0, growth_violations: 0 };
    };
    let bound = first.max_rho.max(equilibrium);
    let worst_ratio = series.records.iter().map(|r| r.max_rho / bound).fold(0.0, f64::max);
    let growth_violations = series
        .records
        .windows(2)
        .filter(|w| w[0].max_rho > equilibrium && w[1].max_rho > w[0].max_rho)
        .count();
    LinfEnvelope {
        worst_ratio,
        growth_violations,
    }
}

/// `true` when the last `window` records have strictly increasing
/// `rho_xx_at_0`.
pub fn curvature_monotone_tail(records: &[DiagnosticRecord], window: usize) -> bool {
    if window == 0 || records.len() < window {
        return false;
    }
    records[records.len() - window..]
        .windows(2)
        .all(|w| w[1].rho_xx_at_0 > w[0].rho_xx_at_0)
}

/// Times at which `supp A` pokes out of `supp ρ₀` widened by `slack`.
pub fn area_outside_initial_density(series: &DiagnosticSeries, slack: f64) -> Vec<f64> {
    let Some(first) = series.records.first() else {
        return Vec::new();
    };
    let rho0 = &first.supp_rho;
    series
        .records
        .iter()
        .filter(|r| {
            !r.supp_a
                .iter()
                .all(|ia| rho0.iter().any(|ir| ia.within(ir, slack)))
        })
        .map(|r| r.t)
        .collect()
}

/// Outcome of one invariant in [`check_series`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Model data the series-level checks need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckContext {
    /// `β/(α(1−μ))`
    pub equilibrium: f64,
    /// Blow-up threshold `μβ‖Γ‖₁/(1−μ)`.
    pub theta: f64,
}

/// Invariants that can be evaluated from the recorded series alone.
pub fn check_series(series: &DiagnosticSeries, ctx: CheckContext) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let recs = &series.records;

    let increasing = recs.windows(2).all(|w| w[1].t > w[0].t);
    out.push(CheckOutcome {
        name: "timestamps_increasing",
        passed: increasing && !recs.is_empty(),
        detail: format!("{} records", recs.len()),
    });

    let worst_min = recs
        .iter()
        .map(|r| r.min_rho.min(r.min_a))
        .fold(f64::INFINITY, f64::min);
    out.push(CheckOutcome {
        name: "positivity",
        passed: worst_min >= 0.0,
        detail: format!("smallest min(rho, A) = {worst_min:e}"),
    });

    let env = linf_envelope(series, ctx.equilibrium);
    out.push(CheckOutcome {
        name: "linf_envelope",
        passed: env.worst_ratio <= 1.01 && env.growth_violations == 0,
        detail: format!(
            "worst ratio {:.6}, growth above equilibrium at {} records",
            env.worst_ratio, env.growth_violations
        ),
    });

    let sym = recs.iter().map(|r| r.symmetry_defect_rho).fold(0.0, f64::max);
    out.push(CheckOutcome {
        name: "symmetry",
        passed: sym.is_finite(),
        detail: format!("largest symmetry defect {sym:e}"),
    });

    let outside = area_outside_initial_density(series, series.dx);
    out.push(CheckOutcome {
        name: "area_support_within_initial_density_support",
        passed: outside.is_empty(),
        detail: match outside.first() {
            Some(t) => format!("{} records violate, first at t = {t:e}", outside.len()),
            None => "all records inside".into(),
        },
    });

    match support_invariance_report(series, 2.0) {
        SupportReport::Measured(rep) => out.push(CheckOutcome {
            name: "density_support_invariance",
            passed: rep.max_endpoint_drift_rho <= 2.0,
            detail: format!("max endpoint drift {:.3} cells", rep.max_endpoint_drift_rho),
        }),
        SupportReport::UnsupportedTopology { t } => out.push(CheckOutcome {
            name: "density_support_invariance",
            passed: true,
            detail: format!("skipped: non-interval support at t = {t:e}"),
        }),
    }

    if let Some(first) = recs.first() {
        let y0 = first.rho_xx_at_0;
        if y0 > ctx.theta && y0 > 0.0 {
            let bound = 1.5 * t_star(y0, ctx.theta);
            let t_last = recs.last().map(|r| r.t).unwrap_or(0.0);
            let escalated = recs.iter().any(|r| r.rho_xx_at_0 > 2.0 * y0);
            out.push(CheckOutcome {
                name: "blowup_before_comparison_time",
                passed: !escalated || t_last <= bound,
                detail: format!("t_last = {t_last:e}, 1.5 t_star = {bound:e}"),
            });
        }
    }
    out
}

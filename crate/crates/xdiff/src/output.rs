//! CSV and text files written by a run, and the readers for CSV inputs.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use xdiff_core::diagnostics::{DiagnosticRecord, DiagnosticSeries, Interval};
use xdiff_core::integrator::RunOutcome;
use xdiff_core::{Field, Grid, State};

use crate::config::{render, RunConfig};

pub const SERIES_HEADER: &str =
    "t,max_rho,min_rho,min_A,rho_xx_0,supp_rho_lo,supp_rho_hi,supp_A_lo,supp_A_hi,mass_rho,mass_A,e_tilde,e_sqrt,sym_defect";

/// 17 significant digits; `inf`/`nan` for non-finite values.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Smallest interval covering all pieces; `None` when empty.
fn hull(s: &[Interval]) -> Option<Interval> {
    Some(Interval { lo: s.first()?.lo, hi: s.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max) })
}

fn series_row(r: &DiagnosticRecord) -> String {
    let (rl, rh) = hull(&r.supp_rho).map_or((f64::NAN, f64::NAN), |i| (i.lo, i.hi));
    let (al, ah) = hull(&r.supp_a).map_or((f64::NAN, f64::NAN), |i| (i.lo, i.hi));
    [
        r.t, r.max_rho, r.min_rho, r.min_a, r.rho_xx_at_0, rl, rh, al, ah, r.mass_rho, r.mass_a, r.e_tilde,
        r.e_sqrt, r.symmetry_defect_rho,
    ]
    .iter()
    .map(|&v| fmt_num(v))
    .collect::<Vec<_>>()
    .join(",")
}

pub fn write_series(path: &Path, series: &DiagnosticSeries) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{SERIES_HEADER}")?;
    for r in &series.records {
        writeln!(w, "{}", series_row(r))?;
    }
    w.flush()
}

pub fn write_snapshot(path: &Path, s: &State) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x,A,rho")?;
    let g = s.grid();
    for (j, x) in g.nodes().enumerate() {
        writeln!(w, "{},{},{}", fmt_num(x), fmt_num(s.a.values()[j]), fmt_num(s.rho.values()[j]))?;
    }
    w.flush()
}

pub fn outcome_text(o: &RunOutcome) -> String {
    let mut s = format!(
        "halt_reason = {}\nt_final = {}\nsteps = {}\nclipped_mass = {}\n",
        o.halt_reason.as_str(),
        fmt_num(o.final_state.t),
        o.steps,
        fmt_num(o.clipped_mass),
    );
    if let Some(f) = &o.fault {
        s.push_str(&format!("fault = {f}\n"));
    }
    s
}

/// Writes `series.csv`, `snapshot_<k>.csv`, `outcome.txt` and the rendered
/// `config.txt` into `dir`.
pub fn write_outputs(dir: &Path, outcome: &RunOutcome, config: &RunConfig) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_series(&dir.join("series.csv"), &outcome.series).context("writing series.csv")?;
    for (k, snap) in outcome.snapshots.iter().enumerate() {
        let p = dir.join(format!("snapshot_{k}.csv"));
        write_snapshot(&p, snap).with_context(|| format!("writing {}", p.display()))?;
    }
    fs::write(dir.join("outcome.txt"), outcome_text(outcome)).context("writing outcome.txt")?;
    fs::write(dir.join("config.txt"), render(config)).context("writing config.txt")?;
    Ok(())
}

fn parse_num(s: &str) -> Option<f64> {
    match s.trim() {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        v => v.parse().ok(),
    }
}

fn interval(lo: f64, hi: f64) -> Vec<Interval> {
    if lo.is_nan() || hi.is_nan() {
        Vec::new()
    } else {
        vec![Interval { lo, hi }]
    }
}

/// Reads a `series.csv`. Columns the file does not carry (`max_A`, clipped
/// mass, zero-set leak) come back as `NaN`/`None`.
pub fn read_series(path: &Path, half_length: f64, dx: f64) -> anyhow::Result<DiagnosticSeries> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SERIES_HEADER) {
        bail!("{}: header does not match `{SERIES_HEADER}`", path.display());
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Option<Vec<f64>> = line.split(',').map(parse_num).collect();
        let v = match v {
            Some(v) if v.len() == 14 => v,
            _ => bail!("{}: line {}: expected 14 numeric columns", path.display(), i + 2),
        };
        records.push(DiagnosticRecord {
            t: v[0],
            max_rho: v[1],
            min_rho: v[2],
            min_a: v[3],
            max_a: f64::NAN,
            rho_xx_at_0: v[4],
            supp_rho: interval(v[5], v[6]),
            supp_a: interval(v[7], v[8]),
            mass_rho: v[9],
            mass_a: v[10],
            e_tilde: v[11],
            e_sqrt: v[12],
            symmetry_defect_rho: v[13],
            clipped_mass: 0.0,
            zero_set_leak: None,
        });
    }
    Ok(DiagnosticSeries { half_length, dx, records })
}

/// Reads a two-column CSV with the given header and checks that the `x`
/// column matches the grid nodes.
pub fn read_node_csv(path: &Path, grid: &Grid, value_name: &str) -> anyhow::Result<Field> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let want = format!("x,{value_name}");
    match lines.next() {
        Some(h) if h.replace(' ', "") == want => {}
        _ => bail!("{}: expected header `{want}`", path.display()),
    }
    let mut values = Vec::with_capacity(grid.len());
    for (j, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let (Some(x), Some(v)) = (cols.first().and_then(|s| parse_num(s)), cols.get(1).and_then(|s| parse_num(s))) else {
            bail!("{}: row {}: expected two numbers", path.display(), j + 1);
        };
        if cols.len() != 2 {
            bail!("{}: row {}: expected two columns", path.display(), j + 1);
        }
        if j >= grid.len() || (x - grid.node(j)).abs() > 1e-9 * grid.half_length() {
            bail!("{}: row {}: x = {x} does not match grid node {j}", path.display(), j + 1);
        }
        values.push(v);
    }
    if values.len() != grid.len() {
        bail!("{}: {} rows, but the grid has {} nodes", path.display(), values.len(), grid.len());
    }
    Ok(Field::new(grid, values)?)
}

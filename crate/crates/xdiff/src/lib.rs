//! Batch front-end for the `xdiff-core` simulator: config files, presets,
//! CSV outputs, sweeps and the post-hoc invariant check.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context};
use xdiff_core::diagnostics::{check_series, CheckContext, CheckOutcome};
use xdiff_core::integrator::{run, HaltReason, RunOutcome, RunSetup};
use xdiff_core::model::blowup_threshold;
use xdiff_core::KernelSpec;

use config::{InitialDataSpec, KernelConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAULT: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_UNDERFLOW: i32 = 4;

pub fn exit_code(h: HaltReason) -> i32 {
    match h {
        HaltReason::ReachedTEnd => EXIT_OK,
        HaltReason::BlowupDetected => EXIT_BLOWUP,
        HaltReason::DtUnderflow => EXIT_UNDERFLOW,
        HaltReason::NumericalFault => EXIT_FAULT,
    }
}

/// Exit code for a batch: config/IO errors first, then faults, underflow,
/// blow-up.
pub fn combined_exit_code(codes: &[i32]) -> i32 {
    [EXIT_CONFIG, EXIT_FAULT, EXIT_UNDERFLOW, EXIT_BLOWUP]
        .into_iter()
        .find(|c| codes.contains(c))
        .unwrap_or(EXIT_OK)
}

fn load_kernel(c: &RunConfig, base_dir: &Path) -> anyhow::Result<KernelSpec> {
    Ok(match &c.kernel {
        KernelConfig::Box { half_width } => KernelSpec::boxed(*half_width)?,
        KernelConfig::Csv { path } => {
            let p = RunConfig::resolve(base_dir, path);
            KernelSpec::sampled(output::read_node_csv(&p, &c.grid(), "gamma")?)?
        }
    })
}

/// Turns a parsed config into a runnable setup, reading CSV inputs
/// relative to `base_dir`.
pub fn build_setup(c: &RunConfig, base_dir: &Path) -> anyhow::Result<RunSetup> {
    let grid = c.grid();
    let sample = |spec: &InitialDataSpec, name: &str| -> anyhow::Result<_> {
        match spec {
            InitialDataSpec::Csv { path } => {
                output::read_node_csv(&RunConfig::resolve(base_dir, path), &grid, "value")
            }
            other => Ok(other.profile().expect("closed-form profile").sample(&grid)?),
        }
        .with_context(|| format!("initial {name}"))
    };
    Ok(RunSetup {
        params: c.model_params(load_kernel(c, base_dir)?),
        scheme: c.scheme,
        mode: c.mode,
        a0: sample(&c.init_a, "A")?,
        rho0: sample(&c.init_rho, "rho")?,
        t_end: c.t_end,
        record_every: c.record_every,
        snapshot_times: c.snapshot_times.clone(),
        ctrl: c.ctrl.clone(),
    })
}

/// One unit of work: a config, where its relative inputs live and where
/// its outputs go.
#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub output_dir: PathBuf,
}

/// Runs a job and writes its outputs.
pub fn execute(job: &Job) -> anyhow::Result<RunOutcome> {
    let setup = build_setup(&job.config, &job.base_dir)?;
    let outcome = run(&setup).with_context(|| format!("{}: invalid run setup", job.name))?;
    output::write_outputs(&job.output_dir, &outcome, &job.config)?;
    Ok(outcome)
}

/// Sweep concurrency: `XDIFF_THREADS` if set, otherwise the number of
/// available cores.
pub fn sweep_threads() -> anyhow::Result<usize> {
    match std::env::var("XDIFF_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => bail!("XDIFF_THREADS must be a positive integer, got `{v}`"),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs independent jobs on at most `threads` workers; results come back
/// in job order.
pub fn execute_all(jobs: &[Job], threads: usize) -> Vec<anyhow::Result<RunOutcome>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<anyhow::Result<RunOutcome>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = execute(job);
                *slots[i].lock().expect("unpoisoned") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("unpoisoned").expect("every job ran"))
        .collect()
}

/// Re-runs the series-level invariants over a written `series.csv`, with
/// model data taken from the accompanying config.
pub fn check_files(series: &Path, config_path: &Path) -> anyhow::Result<Vec<CheckOutcome>> {
    let text = std::fs::read_to_string(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let c = config::parse_config(&text).with_context(|| format!("parsing {}", config_path.display()))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let params = c.model_params(load_kernel(&c, base)?);
    let grid = c.grid();
    let data = output::read_series(series, grid.half_length(), grid.dx())?;
    let ctx = CheckContext {
        equilibrium: params.beta / (params.alpha * (1.0 - params.mu)),
        theta: blowup_threshold(&params)?,
    };
    Ok(check_series(&data, ctx))
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xdiff::config::{apply_overrides, parse_config, preset};
use xdiff::{check_files, combined_exit_code, execute_all, exit_code, sweep_threads, Job, EXIT_CONFIG, EXIT_FAULT};

/// Periodic area/density cross-diffusion simulator.
#[derive(Parser)]
#[command(name = "xdiff", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one or more config files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Run the configs concurrently (capped by XDIFF_THREADS).
        #[arg(long)]
        sweep: bool,
    },
    /// Run a built-in experiment.
    Preset {
        /// fig1-blowup or fig2-support
        name: String,
        /// Output directory (default: the preset's run.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace a config entry, e.g. --override grid.N=512
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Print the preset's config text and exit.
        #[arg(long)]
        print: bool,
    },
    /// Re-check the invariants on an existing series.csv.
    Check {
        series: PathBuf,
        /// Config of the run (default: config.txt next to the series).
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_job(path: &Path) -> anyhow::Result<Job> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let config = parse_config(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(Job {
        name: path.display().to_string(),
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        output_dir: config.output_dir.clone(),
        config,
    })
}

fn run_jobs(jobs: Vec<Job>, threads: usize) -> i32 {
    let mut codes = Vec::new();
    for (job, result) in jobs.iter().zip(execute_all(&jobs, threads)) {
        match result {
            Ok(o) => {
                println!(
                    "{}: {} at t = {:e} after {} steps -> {}",
                    job.name,
                    o.halt_reason.as_str(),
                    o.final_state.t,
                    o.steps,
                    job.output_dir.display()
                );
                if let Some(f) = &o.fault {
                    eprintln!("{}: {f}", job.name);
                }
                codes.push(exit_code(o.halt_reason));
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                codes.push(EXIT_CONFIG);
            }
        }
    }
    combined_exit_code(&codes)
}

fn main_inner(cli: Cli) -> anyhow::Result<i32> {
    match cli.cmd {
        Cmd::Run { configs, sweep } => {
            let mut jobs = Vec::new();
            for p in &configs {
                jobs.push(load_job(p)?);
            }
            let threads = if sweep {
                let mut dirs: Vec<&PathBuf> = jobs.iter().map(|j| &j.output_dir).collect();
                dirs.sort();
                if let Some(w) = dirs.windows(2).find(|w| w[0] == w[1]) {
                    anyhow::bail!("sweep jobs share the output directory {}", w[0].display());
                }
                sweep_threads()?
            } else {
                1
            };
            Ok(run_jobs(jobs, threads))
        }
        Cmd::Preset { name, out, overrides, print } => {
            let mut config = apply_overrides(&preset(&name)?, &overrides)?;
            if print {
                print!("{}", xdiff::config::render(&config));
                return Ok(0);
            }
            if let Some(dir) = out {
                config.output_dir = dir;
            }
            let job = Job { name, base_dir: PathBuf::from("."), output_dir: config.output_dir.clone(), config };
            Ok(run_jobs(vec![job], 1))
        }
        Cmd::Check { series, config } => {
            let config = config.unwrap_or_else(|| series.with_file_name("config.txt"));
            let results = check_files(&series, &config)?;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(if results.iter().all(|r| r.passed) { 0 } else { EXIT_FAULT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use xdiff::config::{parse_config, preset_fig1, preset_fig2, render};

fn xdiff(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xdiff"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL: &str = "\
grid.L = 1
grid.N = 16
params.alpha = 1
params.mu = 0.5
params.beta = 0.75
params.beta_tilde = 0.5
params.K = 1
params.K_tilde = 0.5
kernel.kind = box
kernel.half_width = 0.05
init.rho.kind = constant
init.rho.c = 1
init.A.kind = constant
init.A.c = 1
run.record_every = 1
";

fn write_config(dir: &Path, name: &str, extra: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p.display().to_string()
}

#[test]
fn zero_step_run_writes_initial_record_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.cfg", "run.t_end = 0\nrun.snapshot_times = 0\nrun.output_dir = out\n");
    let o = xdiff(&["run", &cfg], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let series = fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
    let rows: Vec<&str> = series.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], xdiff::output::SERIES_HEADER);
    assert!(rows[1].starts_with("0.0000000000000000e0,"));
    let snap = fs::read_to_string(dir.path().join("out/snapshot_0.csv")).unwrap();
    assert_eq!(snap.lines().count(), 17);
    let outcome = fs::read_to_string(dir.path().join("out/outcome.txt")).unwrap();
    assert!(outcome.contains("halt_reason = reached_t_end"));
    let back = parse_config(&fs::read_to_string(dir.path().join("out/config.txt")).unwrap()).unwrap();
    assert_eq!(back.n, 16);
}

#[test]
fn config_errors_exit_1_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "run.t_end = 0\ngrid.N = 15\n");
    let o = xdiff(&["run", &cfg], dir.path());
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("duplicate key `grid.N`") && err.contains("line 17"), "{err}");

    let text = SMALL.replace("grid.N = 16", "grid.N = 15") + "run.t_end = 0\n";
    fs::write(dir.path().join("odd.cfg"), text).unwrap();
    let o = xdiff(&["run", "odd.cfg"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2: N must be even"));

    assert_eq!(code(&xdiff(&["run", "missing.cfg"], dir.path())), 1);
    assert_eq!(code(&xdiff(&["preset", "fig3"], dir.path())), 1);
}

#[test]
fn dt_underflow_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let extra = "run.t_end = 1\nrun.output_dir = out\nctrl.dt_min = 0.001\nctrl.dt_max = 0.01\n";
    let cfg = write_config(dir.path(), "u.cfg", extra);
    let text = fs::read_to_string(&cfg).unwrap().replace("init.rho.c = 1", "init.rho.c = 10");
    fs::write(&cfg, text).unwrap();
    let o = xdiff(&["run", &cfg], dir.path());
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let outcome = fs::read_to_string(dir.path().join("out/outcome.txt")).unwrap();
    assert!(outcome.contains("dt_underflow"));
}

#[test]
fn numerical_fault_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // a box of density next to empty space, with a spectral flux and no
    // clipping budget, undershoots below zero on the first step
    let text = SMALL
        .replace("grid.N = 16", "grid.N = 64")
        .replace("init.rho.kind = constant\ninit.rho.c = 1", "init.rho.kind = poly_bump\ninit.rho.amp = 1\ninit.rho.a = -0.2\ninit.rho.b = 0.2\ninit.rho.p = 0\ninit.rho.q = 0\ninit.rho.r = 0")
        + "run.t_end = 0.001\nrun.scheme = spectral\nrun.output_dir = out\nctrl.clip_policy = reject\n";
    fs::write(dir.path().join("f.cfg"), text).unwrap();
    let o = xdiff(&["run", "f.cfg"], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let outcome = fs::read_to_string(dir.path().join("out/outcome.txt")).unwrap();
    assert!(outcome.contains("numerical_fault") && outcome.contains("fault = "));
}

#[test]
fn sweep_runs_each_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.cfg", "run.t_end = 0.01\nrun.output_dir = out_a\n");
    let b = write_config(dir.path(), "b.cfg", "run.t_end = 0.02\nrun.output_dir = out_b\n");
    let o = Command::new(env!("CARGO_BIN_EXE_xdiff"))
        .args(["run", "--sweep", &a, &b])
        .env("XDIFF_THREADS", "2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for d in ["out_a", "out_b"] {
        assert!(fs::read_to_string(dir.path().join(d).join("outcome.txt")).unwrap().contains("reached_t_end"));
    }

    let c = write_config(dir.path(), "c.cfg", "run.t_end = 0.01\nrun.output_dir = out_a\n");
    assert_eq!(code(&xdiff(&["run", "--sweep", &a, &c], dir.path())), 1);

    let o = Command::new(env!("CARGO_BIN_EXE_xdiff"))
        .args(["run", "--sweep", &a, &b])
        .env("XDIFF_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn check_reports_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", "run.t_end = 0.05\nrun.output_dir = out\n");
    assert_eq!(code(&xdiff(&["run", &cfg], dir.path())), 0);
    let o = xdiff(&["check", "out/series.csv"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
    assert!(stdout.contains("positivity") && stdout.contains("linf_envelope"));

    // tampered series: negative density
    let series = fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
    let mut rows: Vec<String> = series.lines().map(String::from).collect();
    let mut cols: Vec<String> = rows[1].split(',').map(String::from).collect();
    cols[2] = "-1.0".into();
    rows[1] = cols.join(",");
    fs::write(dir.path().join("out/series.csv"), rows.join("\n")).unwrap();
    let o = xdiff(&["check", "out/series.csv"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL positivity"));

    assert_eq!(code(&xdiff(&["check", "nothing.csv"], dir.path())), 1);
}

#[test]
fn csv_kernel_and_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let g = xdiff_core::Grid::new(1.0, 16).unwrap();
    let gamma: String = g.nodes().map(|x| format!("{x},{}\n", if x.abs() < 0.1 { 1.0 } else { 0.0 })).collect();
    fs::write(dir.path().join("gamma.csv"), format!("x,gamma\n{gamma}")).unwrap();
    let rho: String = g.nodes().map(|x| format!("{x},{}\n", 1.0 + 0.1 * (std::f64::consts::PI * x).cos())).collect();
    fs::write(dir.path().join("rho0.csv"), format!("x,value\n{rho}")).unwrap();
    let text = SMALL
        .replace("kernel.kind = box\nkernel.half_width = 0.05", "kernel.kind = csv\nkernel.path = gamma.csv")
        .replace("init.rho.kind = constant\ninit.rho.c = 1", "init.rho.kind = csv\ninit.rho.path = rho0.csv")
        + "run.t_end = 0.01\nrun.output_dir = out\nrun.mode = sqrt\n";
    fs::create_dir(dir.path().join("cfgs")).unwrap();
    // relative input paths resolve against the config's directory
    fs::write(dir.path().join("cfgs/c.cfg"), text.replace("= gamma.csv", "= ../gamma.csv").replace("= rho0.csv", "= ../rho0.csv")).unwrap();
    let o = xdiff(&["run", "cfgs/c.cfg"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    fs::write(dir.path().join("gamma.csv"), "x,gamma\n0,1\n").unwrap();
    assert_eq!(code(&xdiff(&["run", "cfgs/c.cfg"], dir.path())), 1);
}

#[test]
fn preset_print_round_trips_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    for (name, c) in [("fig1-blowup", preset_fig1()), ("fig2-support", preset_fig2())] {
        let o = xdiff(&["preset", name, "--print"], dir.path());
        assert_eq!(code(&o), 0);
        let text = String::from_utf8(o.stdout).unwrap();
        assert_eq!(text, render(&c));
        assert_eq!(parse_config(&text).unwrap(), c);
    }
    let o = xdiff(
        &["preset", "fig2-support", "--print", "--override", "grid.N=128", "--override", "run.record_every=3"],
        dir.path(),
    );
    let c = parse_config(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!((c.n, c.record_every), (128, 3));
    assert_eq!(code(&xdiff(&["preset", "fig2-support", "--override", "grid.N=17"], dir.path())), 1);
}

#[test]
fn small_preset_run_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = xdiff(
        &["preset", "fig2-support", "--out", "p", "--override", "grid.N=128", "--override", "run.t_end=0.0105", "--override", "run.snapshot_times=0.0, 0.0035, 0.007, 0.0105"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..4 {
        let s = fs::read_to_string(dir.path().join(format!("p/snapshot_{k}.csv"))).unwrap();
        assert_eq!(s.lines().count(), 129);
    }
    assert!(!dir.path().join("p/snapshot_4.csv").exists());
}

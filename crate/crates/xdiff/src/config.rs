//! Flat `section.key = value` run configuration, its renderer and the
//! built-in presets.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use xdiff_core::integrator::{ClipPolicy, Mode, StepControl};
use xdiff_core::{FluxScheme, Grid, InitialProfile, KernelSpec, ModelParams};

/// A rejected config, located by line when the offending key is known.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelConfig {
    Box { half_width: f64 },
    /// Node samples read from a `x,gamma` CSV file.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialDataSpec {
    PolyBump { amp: f64, a: f64, b: f64, p: u32, q: u32, r: u32 },
    Constant { c: f64 },
    Cosine { mean: f64, amp: f64, mode: u32 },
    /// Node values read from a `x,value` CSV file.
    Csv { path: PathBuf },
}

impl InitialDataSpec {
    /// The closed-form profile, or `None` for CSV data.
    pub fn profile(&self) -> Option<InitialProfile> {
        Some(match *self {
            InitialDataSpec::PolyBump { amp, a, b, p, q, r } => InitialProfile::PolyBump { amp, a, b, p, q, r },
            InitialDataSpec::Constant { c } => InitialProfile::Constant { c },
            InitialDataSpec::Cosine { mean, amp, mode } => InitialProfile::Cosine { mean, amp, mode },
            InitialDataSpec::Csv { .. } => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub half_length: f64,
    pub n: usize,
    pub alpha: f64,
    pub mu: f64,
    pub beta: f64,
    pub beta_tilde: f64,
    pub k: f64,
    pub k_tilde: f64,
    pub kernel: KernelConfig,
    pub init_rho: InitialDataSpec,
    pub init_a: InitialDataSpec,
    pub mode: Mode,
    pub scheme: FluxScheme,
    pub ctrl: StepControl,
    pub t_end: f64,
    pub record_every: usize,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
}

pub const PRESETS: [&str; 2] = ["fig1-blowup", "fig2-support"];

fn poly(amp: f64, a: f64, b: f64, q: u32) -> InitialDataSpec {
    InitialDataSpec::PolyBump { amp, a, b, p: 3, q, r: 3 }
}

fn preset_config(name: &str, rho: InitialDataSpec, a: InitialDataSpec, t_end: f64, snaps: Vec<f64>) -> RunConfig {
    RunConfig {
        half_length: 1.0,
        n: 1024,
        alpha: 1.0,
        mu: 0.5,
        beta: 0.75,
        beta_tilde: 0.5,
        k: 1.0,
        k_tilde: 0.5,
        kernel: KernelConfig::Box { half_width: 0.05 },
        init_rho: rho,
        init_a: a,
        mode: Mode::Original,
        scheme: FluxScheme::Conservative,
        ctrl: StepControl::default(),
        t_end,
        record_every: 10,
        snapshot_times: snaps,
        output_dir: PathBuf::from("out").join(name),
    }
}

pub fn preset_fig1() -> RunConfig {
    preset_config(
        "fig1-blowup",
        poly(-2000.0, -0.5, 0.5, 2),
        poly(-6000.0, -0.3, 0.3, 2),
        0.05,
        vec![0.0, 0.001, 0.002, 0.003, 0.004],
    )
}

pub fn preset_fig2() -> RunConfig {
    preset_config(
        "fig2-support",
        poly(-140.0, -0.5, 0.5, 0),
        poly(-2000.0, -0.3, 0.3, 0),
        0.014,
        vec![0.0, 0.0035, 0.007, 0.0105, 0.014],
    )
}

pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    match name {
        "fig1-blowup" => Ok(preset_fig1()),
        "fig2-support" => Ok(preset_fig2()),
        _ => Err(ConfigError {
            line: None,
            message: format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")),
        }),
    }
}

fn mode_name(m: &Mode) -> &'static str {
    match m {
        Mode::Original => "original",
        Mode::Regularized { .. } => "regularized",
        Mode::Sqrt => "sqrt",
    }
}

fn scheme_name(s: FluxScheme) -> &'static str {
    match s {
        FluxScheme::Conservative => "conservative",
        FluxScheme::Spectral => "spectral",
    }
}

fn render_init(out: &mut String, field: &str, spec: &InitialDataSpec) {
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "init.{field}.{k} = {v}");
    };
    match spec {
        InitialDataSpec::PolyBump { amp, a, b, p, q, r } => {
            line("kind", "poly_bump".into());
            line("amp", format!("{amp:?}"));
            line("a", format!("{a:?}"));
            line("b", format!("{b:?}"));
            line("p", p.to_string());
            line("q", q.to_string());
            line("r", r.to_string());
        }
        InitialDataSpec::Constant { c } => {
            line("kind", "constant".into());
            line("c", format!("{c:?}"));
        }
        InitialDataSpec::Cosine { mean, amp, mode } => {
            line("kind", "cosine".into());
            line("mean", format!("{mean:?}"));
            line("amp", format!("{amp:?}"));
            line("mode", mode.to_string());
        }
        InitialDataSpec::Csv { path } => {
            line("kind", "csv".into());
            line("path", path.display().to_string());
        }
    }
}

/// Text form that [`parse_config`] maps back to an equal config.
pub fn render(c: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("grid.L", format!("{:?}", c.half_length));
    kv("grid.N", c.n.to_string());
    kv("params.alpha", format!("{:?}", c.alpha));
    kv("params.mu", format!("{:?}", c.mu));
    kv("params.beta", format!("{:?}", c.beta));
    kv("params.beta_tilde", format!("{:?}", c.beta_tilde));
    kv("params.K", format!("{:?}", c.k));
    kv("params.K_tilde", format!("{:?}", c.k_tilde));
    match &c.kernel {
        KernelConfig::Box { half_width } => {
            kv("kernel.kind", "box".into());
            kv("kernel.half_width", format!("{half_width:?}"));
        }
        KernelConfig::Csv { path } => {
            kv("kernel.kind", "csv".into());
            kv("kernel.path", path.display().to_string());
        }
    }
    render_init(&mut s, "rho", &c.init_rho);
    render_init(&mut s, "A", &c.init_a);
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("run.mode", mode_name(&c.mode).into());
    if let Mode::Regularized { eps, delta } = c.mode {
        kv("run.eps", format!("{eps:?}"));
        kv("run.delta", format!("{delta:?}"));
    }
    kv("run.scheme", scheme_name(c.scheme).into());
    kv("run.t_end", format!("{:?}", c.t_end));
    kv("run.record_every", c.record_every.to_string());
    let snaps: Vec<String> = c.snapshot_times.iter().map(|t| format!("{t:?}")).collect();
    kv("run.snapshot_times", snaps.join(", "));
    kv("run.output_dir", c.output_dir.display().to_string());
    let k = &c.ctrl;
    kv("ctrl.cfl_safety", format!("{:?}", k.cfl_safety));
    kv("ctrl.dt_min", format!("{:?}", k.dt_min));
    kv("ctrl.dt_max", format!("{:?}", k.dt_max));
    kv("ctrl.positivity_tol", format!("{:?}", k.positivity_tol));
    kv("ctrl.clip_policy", k.clip_policy.as_str().into());
    kv("ctrl.blowup_cap", format!("{:?}", k.blowup_cap));
    kv("ctrl.curvature_growth_factor", format!("{:?}", k.curvature_growth_factor));
    kv("ctrl.monotone_window", k.monotone_window.to_string());
    kv("ctrl.max_clipped_fraction", format!("{:?}", k.max_clipped_fraction));
    s
}

struct Entry {
    value: String,
    line: usize,
    used: Cell<bool>,
}

struct Raw {
    entries: BTreeMap<String, Entry>,
}

impl Raw {
    fn parse(text: &str) -> Result<Raw, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw_line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError { line: Some(line), message: format!("expected `key = value`, got `{body}`") });
            };
            let key = k.trim();
            let valid = !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
            if !valid {
                return Err(ConfigError { line: Some(line), message: format!("malformed key `{key}`") });
            }
            let entry = Entry { value: v.trim().to_string(), line, used: Cell::new(false) };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(ConfigError {
                    line: Some(line),
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
        }
        Ok(Raw { entries })
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { line: self.line(key), message: message.into() }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| {
            e.used.set(true);
            e.value.as_str()
        })
    }

    fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError { line: None, message: format!("missing required key `{key}`") })
    }

    fn number<T: std::str::FromStr>(&self, key: &str, v: &str) -> Result<T, ConfigError> {
        v.parse().map_err(|_| self.err(key, format!("`{key}`: cannot parse `{v}` as a number")))
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.require(key)?;
        let x: f64 = self.number(key, v)?;
        if !x.is_finite() {
            return Err(self.err(key, format!("`{key}` must be finite")));
        }
        Ok(x)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        if self.entries.contains_key(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    fn uint<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| self.err(key, format!("`{key}` must be a nonnegative integer, got `{v}`")))
    }

    fn uint_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        if self.entries.contains_key(key) {
            self.uint(key)
        } else {
            Ok(default)
        }
    }

    fn unused(&self) -> Option<ConfigError> {
        self.entries.iter().find(|(_, e)| !e.used.get()).map(|(k, e)| ConfigError {
            line: Some(e.line),
            message: format!("unknown key `{k}`"),
        })
    }
}

fn parse_init(raw: &Raw, field: &str) -> Result<InitialDataSpec, ConfigError> {
    let key = |k: &str| format!("init.{field}.{k}");
    let kind = raw.require(&key("kind"))?;
    let spec = match kind {
        "poly_bump" => InitialDataSpec::PolyBump {
            amp: raw.f64(&key("amp"))?,
            a: raw.f64(&key("a"))?,
            b: raw.f64(&key("b"))?,
            p: raw.uint(&key("p"))?,
            q: raw.uint(&key("q"))?,
            r: raw.uint(&key("r"))?,
        },
        "constant" => InitialDataSpec::Constant { c: raw.f64(&key("c"))? },
        "cosine" => InitialDataSpec::Cosine {
            mean: raw.f64(&key("mean"))?,
            amp: raw.f64(&key("amp"))?,
            mode: raw.uint(&key("mode"))?,
        },
        "csv" => InitialDataSpec::Csv { path: PathBuf::from(raw.require(&key("path"))?) },
        other => {
            return Err(raw.err(
                &key("kind"),
                format!("unknown initial data kind `{other}` (poly_bump, constant, cosine, csv)"),
            ))
        }
    };
    if let Some(profile) = spec.profile() {
        profile.validate().map_err(|e| {
            let k = if matches!(spec, InitialDataSpec::PolyBump { .. }) { key("a") } else { key("kind") };
            raw.err(&k, e.to_string())
        })?;
    }
    Ok(spec)
}

fn parse_mode(raw: &Raw) -> Result<Mode, ConfigError> {
    match raw.get("run.mode").unwrap_or("original") {
        "original" => Ok(Mode::Original),
        "sqrt" => Ok(Mode::Sqrt),
        "regularized" => {
            let eps = raw.f64("run.eps")?;
            let delta = raw.f64("run.delta")?;
            if eps < 0.0 {
                return Err(raw.err("run.eps", "eps must be nonnegative"));
            }
            if delta < 0.0 {
                return Err(raw.err("run.delta", "delta must be nonnegative"));
            }
            Ok(Mode::Regularized { eps, delta })
        }
        other => Err(raw.err("run.mode", format!("unknown mode `{other}` (original, regularized, sqrt)"))),
    }
}

fn parse_ctrl(raw: &Raw) -> Result<StepControl, ConfigError> {
    let d = StepControl::default();
    let clip_policy = match raw.get("ctrl.clip_policy").unwrap_or("clip_to_zero") {
        "clip_to_zero" => ClipPolicy::ClipToZero,
        "reject" => ClipPolicy::Reject,
        other => {
            return Err(raw.err("ctrl.clip_policy", format!("unknown clip policy `{other}` (clip_to_zero, reject)")))
        }
    };
    let ctrl = StepControl {
        cfl_safety: raw.f64_or("ctrl.cfl_safety", d.cfl_safety)?,
        dt_min: raw.f64_or("ctrl.dt_min", d.dt_min)?,
        dt_max: raw.f64_or("ctrl.dt_max", d.dt_max)?,
        positivity_tol: raw.f64_or("ctrl.positivity_tol", d.positivity_tol)?,
        clip_policy,
        blowup_cap: raw.f64_or("ctrl.blowup_cap", d.blowup_cap)?,
        curvature_growth_factor: raw.f64_or("ctrl.curvature_growth_factor", d.curvature_growth_factor)?,
        monotone_window: raw.uint_or("ctrl.monotone_window", d.monotone_window)?,
        max_clipped_fraction: raw.f64_or("ctrl.max_clipped_fraction", d.max_clipped_fraction)?,
    };
    ctrl.validate().map_err(|e| {
        let msg = e.to_string();
        let key = ["cfl_safety", "dt_min", "positivity_tol", "blowup_cap", "curvature_growth_factor", "monotone_window", "max_clipped_fraction"]
            .iter()
            .find(|k| msg.contains(*k))
            .map(|k| format!("ctrl.{k}"))
            .filter(|k| raw.line(k).is_some())
            .unwrap_or_else(|| "ctrl.dt_max".into());
        raw.err(&key, msg)
    })?;
    Ok(ctrl)
}

fn strip_core_prefix(msg: String) -> String {
    for p in ["invalid grid: ", "invalid model parameters: ", "invalid kernel: "] {
        if let Some(rest) = msg.strip_prefix(p) {
            return rest.to_string();
        }
    }
    msg
}

/// Parses and validates a config. Relative paths are kept as written.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw = Raw::parse(text)?;
    let half_length = raw.f64("grid.L")?;
    let n: usize = raw.uint("grid.N")?;
    let grid = Grid::new(half_length, n).map_err(|e| {
        let key = if !n.is_multiple_of(2) || n < 16 { "grid.N" } else { "grid.L" };
        raw.err(key, strip_core_prefix(e.to_string()))
    })?;

    let kernel = match raw.require("kernel.kind")? {
        "box" => {
            let half_width = raw.f64("kernel.half_width")?;
            let spec = KernelSpec::boxed(half_width)
                .map_err(|e| raw.err("kernel.half_width", strip_core_prefix(e.to_string())))?;
            spec.symbol(&grid)
                .map_err(|e| raw.err("kernel.half_width", strip_core_prefix(e.to_string())))?;
            KernelConfig::Box { half_width }
        }
        "csv" => KernelConfig::Csv { path: PathBuf::from(raw.require("kernel.path")?) },
        other => return Err(raw.err("kernel.kind", format!("unknown kernel kind `{other}` (box, csv)"))),
    };

    let mut c = RunConfig {
        half_length,
        n,
        alpha: raw.f64("params.alpha")?,
        mu: raw.f64("params.mu")?,
        beta: raw.f64("params.beta")?,
        beta_tilde: raw.f64("params.beta_tilde")?,
        k: raw.f64("params.K")?,
        k_tilde: raw.f64("params.K_tilde")?,
        kernel,
        init_rho: parse_init(&raw, "rho")?,
        init_a: parse_init(&raw, "A")?,
        mode: parse_mode(&raw)?,
        scheme: match raw.get("run.scheme").unwrap_or("conservative") {
            "conservative" => FluxScheme::Conservative,
            "spectral" => FluxScheme::Spectral,
            other => return Err(raw.err("run.scheme", format!("unknown scheme `{other}` (conservative, spectral)"))),
        },
        ctrl: parse_ctrl(&raw)?,
        t_end: raw.f64("run.t_end")?,
        record_every: raw.uint_or("run.record_every", 10)?,
        snapshot_times: Vec::new(),
        output_dir: PathBuf::from(raw.get("run.output_dir").unwrap_or("out")),
    };

    // a dummy box kernel stands in for CSV kernels, which are only read at setup
    let check_params = c.model_params(KernelSpec::boxed(1e-3 * half_length).expect("positive width"));
    check_params.validate().map_err(|e| {
        let msg = strip_core_prefix(e.to_string());
        let word = msg.split_whitespace().next().unwrap_or("");
        raw.err(&format!("params.{word}"), msg)
    })?;
    if c.t_end < 0.0 {
        return Err(raw.err("run.t_end", "t_end must be nonnegative"));
    }
    if c.record_every == 0 {
        return Err(raw.err("run.record_every", "record_every must be at least 1"));
    }
    if let Some(list) = raw.get("run.snapshot_times") {
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let t: f64 = raw.number("run.snapshot_times", item)?;
            if !(0.0..=c.t_end).contains(&t) {
                return Err(raw.err("run.snapshot_times", format!("snapshot time {t} lies outside [0, t_end]")));
            }
            c.snapshot_times.push(t);
        }
    }
    if let Some(e) = raw.unused() {
        return Err(e);
    }
    Ok(c)
}

/// Re-parses `base` with `key=value` overrides replacing or adding lines.
pub fn apply_overrides(base: &RunConfig, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut lines: Vec<(String, String)> = render(base)
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect();
    for o in overrides {
        let Some((k, v)) = o.split_once('=') else {
            return Err(ConfigError { line: None, message: format!("override `{o}` is not of the form key=value") });
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        match lines.iter_mut().find(|(key, _)| *key == k) {
            Some(slot) => slot.1 = v,
            None => lines.push((k, v)),
        }
    }
    // switching kinds leaves keys of the old kind behind; drop them
    let text: String = lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    let mut text = text;
    loop {
        match parse_config(&text) {
            Err(ConfigError { line: Some(l), message }) if message.starts_with("unknown key") => {
                let key = message.trim_start_matches("unknown key `").trim_end_matches('`').to_string();
                if overrides.iter().any(|o| o.split('=').next().map(str::trim) == Some(key.as_str())) {
                    return Err(ConfigError { line: None, message: format!("override: {message}") });
                }
                text = text.lines().enumerate().filter(|(i, _)| i + 1 != l).map(|(_, s)| format!("{s}\n")).collect();
            }
            Err(e) => return Err(ConfigError { line: None, message: format!("after overrides: {e}") }),
            Ok(c) => return Ok(c),
        }
    }
}

impl RunConfig {
    pub fn model_params(&self, kernel: KernelSpec) -> ModelParams {
        ModelParams {
            alpha: self.alpha,
            mu: self.mu,
            beta: self.beta,
            beta_tilde: self.beta_tilde,
            k: self.k,
            k_tilde: self.k_tilde,
            kernel,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.half_length, self.n).expect("validated grid")
    }

    /// Resolves a path from the config against `base_dir`.
    pub fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir.join(p)
        }
    }
}

//! Run configuration in a small `key = value` format:
//!
//! ```text
//! # comment
//! [grid]
//! dim = 2
//! n = 64
//! dealias = 2/3
//!
//! [model]
//! nu = 1e-3, 0        # one value per axis, or a single value for all axes
//! kappa = 0
//! alpha = 0.1
//! buoyancy_axis = 1   # 0-based, must be dim - 1
//!
//! [stepper]
//! scheme = ifrk4      # or rk4
//! dt = adaptive       # or a fixed step
//! cfl = 0.5
//! dt_max = 0.01
//! t_end = 1
//! output_every = 10
//! guard = 1e6
//!
//! [ic]
//! name = taylor_green
//! amplitude = 1
//! theta_amplitude = 1
//! seed = 0
//!
//! [diag]
//! p_grid = 2, 4, 8, 16, 32, 64
//! max_principle_tol = 5e-3
//! lp_drift_tol = 1e-3
//!
//! [output]
//! directory = out
//! snapshot_every = 0  # 0 disables periodic snapshots
//! ```
//!
//! Only `grid.dim`, `grid.n` and `stepper.t_end` are required.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::diagnostics::DiagConfig;
use crate::error::{ConfigIssue, Error, Result};
use crate::experiments::{IcSpec, IC_NAMES};
use crate::models::ModelParams;
use crate::spectral::{DealiasFraction, Grid};
use crate::timestepping::{Scheme, StepperConfig, TimeStep};

const DEFAULT_CFL: f64 = 0.5;
const DEFAULT_DT_MAX: f64 = 1e-2;

const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["dim", "n", "dealias"]),
    ("model", &["nu", "kappa", "alpha", "buoyancy_axis"]),
    (
        "stepper",
        &["scheme", "dt", "cfl", "dt_max", "t_end", "output_every", "guard"],
    ),
    ("ic", &["name", "amplitude", "theta_amplitude", "seed"]),
    ("diag", &["p_grid", "max_principle_tol", "lp_drift_tol"]),
    ("output", &["directory", "snapshot_every"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub dealias: DealiasFraction,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::with_dealias(self.dim, self.n, self.dealias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Steps between snapshots; 0 writes only the final one.
    pub snapshot_every: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelParams,
    pub stepper: StepperConfig,
    pub ic: IcSpec,
    pub diag: DiagConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        parse_config(&std::fs::read_to_string(path)?)
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Reader {
    entries: HashMap<(String, String), Entry>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, line: Option<usize>, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn raw(&self, section: &str, key: &str) -> Option<(usize, String)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|e| (e.line, e.value.clone()))
    }

    fn line(&self, section: &str, key: &str) -> Option<usize> {
        self.raw(section, key).map(|(l, _)| l)
    }

    /// Parses `section.key`; `None` both when absent and on a type error
    /// (which is recorded).
    fn get<T: FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<T> {
        let (line, value) = self.raw(section, key)?;
        match value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.issue(
                    Some(line),
                    &format!("{section}.{key}"),
                    format!("expected {what}, got '{value}'"),
                );
                None
            }
        }
    }

    fn get_or<T: FromStr>(&mut self, section: &str, key: &str, what: &str, default: T) -> T {
        self.get(section, key, what).unwrap_or(default)
    }

    fn required<T: FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<T> {
        if self.raw(section, key).is_none() {
            self.issue(None, &format!("{section}.{key}"), "required key is missing");
            return None;
        }
        self.get(section, key, what)
    }

    fn list(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        let (line, value) = self.raw(section, key)?;
        let parsed: std::result::Result<Vec<f64>, _> =
            value.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) if !v.is_empty() => Some(v),
            _ => {
                self.issue(
                    Some(line),
                    &format!("{section}.{key}"),
                    format!("expected a comma-separated list of numbers, got '{value}'"),
                );
                None
            }
        }
    }

    /// Records an invariant violation at the key's line.
    fn check(&mut self, ok: bool, section: &str, key: &str, message: impl Into<String>) {
        if !ok {
            let line = self.line(section, key);
            self.issue(line, &format!("{section}.{key}"), message);
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn tokenize(text: &str) -> Reader {
    let mut r = Reader {
        entries: HashMap::new(),
        issues: Vec::new(),
    };
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                r.issue(Some(line), s, "malformed section header");
                section = None;
                continue;
            };
            let name = name.trim();
            if KEYS.iter().any(|(sec, _)| *sec == name) {
                section = Some(name.to_string());
            } else {
                r.issue(Some(line), name, "unknown section");
                section = None;
            }
            continue;
        }
        let Some((key, value)) = s.split_once('=') else {
            r.issue(Some(line), s, "expected 'key = value'");
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let Some(sec) = section.clone() else {
            r.issue(Some(line), key, "key outside a known section");
            continue;
        };
        let known = KEYS
            .iter()
            .find(|(name, _)| *name == sec)
            .map(|(_, keys)| keys.contains(&key))
            .unwrap_or(false);
        if !known {
            r.issue(Some(line), &format!("{sec}.{key}"), "unknown key");
            continue;
        }
        let slot = (sec.clone(), key.to_string());
        if let Some(prev) = r.entries.get(&slot) {
            let first = prev.line;
            r.issue(
                Some(line),
                &format!("{sec}.{key}"),
                format!("duplicate key (first set on line {first})"),
            );
            continue;
        }
        r.entries.insert(
            slot,
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    r
}

fn parse_fraction(s: &str) -> Option<(u32, u32)> {
    let (a, b) = s.split_once('/')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut r = tokenize(text);

    let dim: Option<usize> = r.required("grid", "dim", "an integer");
    let n: Option<usize> = r.required("grid", "n", "an integer");
    let dealias = match r.raw("grid", "dealias") {
        None => Some(DealiasFraction::TWO_THIRDS),
        Some((line, v)) => match parse_fraction(&v).map(|(a, b)| DealiasFraction::new(a, b)) {
            Some(Ok(f)) => Some(f),
            Some(Err(e)) => {
                r.issue(Some(line), "grid.dealias", e.to_string());
                None
            }
            None => {
                r.issue(Some(line), "grid.dealias", format!("expected a fraction like 2/3, got '{v}'"));
                None
            }
        },
    };
    if let Some(d) = dim {
        r.check(d == 2 || d == 3, "grid", "dim", format!("must be 2 or 3, got {d}"));
    }
    if let Some(n) = n {
        r.check(
            n >= 8 && n % 2 == 0,
            "grid",
            "n",
            format!("must be even and >= 8, got {n}"),
        );
    }
    let d = dim.filter(|d| *d == 2 || *d == 3).unwrap_or(2);

    let nu = match r.list("model", "nu") {
        Some(v) if v.len() == 1 => vec![v[0]; d],
        Some(v) if v.len() == d => v,
        Some(v) => {
            let line = r.line("model", "nu");
            r.issue(line, "model.nu", format!("expected 1 or {d} values, got {}", v.len()));
            vec![0.0; d]
        }
        None => vec![0.0; d],
    };
    for (j, v) in nu.iter().enumerate() {
        r.check(
            v.is_finite() && *v >= 0.0,
            "model",
            "nu",
            format!("nu[{j}] must be finite and >= 0, got {v}"),
        );
    }
    let kappa: f64 = r.get_or("model", "kappa", "a number", 0.0);
    let alpha: f64 = r.get_or("model", "alpha", "a number", 0.0);
    let buoyancy_axis: usize = r.get_or("model", "buoyancy_axis", "an integer", d - 1);
    r.check(kappa.is_finite() && kappa >= 0.0, "model", "kappa", format!("must be finite and >= 0, got {kappa}"));
    r.check(alpha.is_finite() && alpha >= 0.0, "model", "alpha", format!("must be finite and >= 0, got {alpha}"));
    r.check(
        buoyancy_axis == d - 1,
        "model",
        "buoyancy_axis",
        format!("buoyancy acts along the last axis ({}), got {buoyancy_axis}", d - 1),
    );

    let scheme = match r.raw("stepper", "scheme") {
        None => Scheme::Ifrk4,
        Some((line, v)) => Scheme::parse(&v).unwrap_or_else(|| {
            r.issue(Some(line), "stepper.scheme", format!("expected ifrk4 or rk4, got '{v}'"));
            Scheme::Ifrk4
        }),
    };
    let cfl: f64 = r.get_or("stepper", "cfl", "a number", DEFAULT_CFL);
    let dt_max: f64 = r.get_or("stepper", "dt_max", "a number", DEFAULT_DT_MAX);
    let step = match r.raw("stepper", "dt") {
        None => TimeStep::Adaptive { cfl, dt_max },
        Some((_, v)) if v == "adaptive" => TimeStep::Adaptive { cfl, dt_max },
        Some(_) => {
            let dt: Option<f64> = r.get("stepper", "dt", "a number or 'adaptive'");
            let dt = dt.unwrap_or(1.0);
            r.check(dt > 0.0 && dt.is_finite(), "stepper", "dt", format!("must be > 0, got {dt}"));
            TimeStep::Fixed(dt)
        }
    };
    if let TimeStep::Adaptive { .. } = step {
        r.check(cfl > 0.0 && cfl <= 1.0, "stepper", "cfl", format!("must lie in (0, 1], got {cfl}"));
        r.check(dt_max > 0.0 && dt_max.is_finite(), "stepper", "dt_max", format!("must be > 0, got {dt_max}"));
    }
    let t_end: f64 = r.required("stepper", "t_end", "a number").unwrap_or(0.0);
    r.check(t_end >= 0.0 && t_end.is_finite(), "stepper", "t_end", format!("must be >= 0, got {t_end}"));
    let output_every: u64 = r.get_or("stepper", "output_every", "a positive integer", 10);
    r.check(output_every >= 1, "stepper", "output_every", "must be >= 1");
    let guard: f64 = r.get_or("stepper", "guard", "a number", 1e6);
    r.check(guard > 0.0, "stepper", "guard", format!("must be > 0, got {guard}"));

    let ic_default = IcSpec::default();
    let ic_name = r.raw("ic", "name").map(|(_, v)| v).unwrap_or(ic_default.name);
    r.check(
        IC_NAMES.contains(&ic_name.as_str()),
        "ic",
        "name",
        format!("unknown initial condition '{ic_name}' (known: {})", IC_NAMES.join(", ")),
    );
    let amplitude: f64 = r.get_or("ic", "amplitude", "a number", ic_default.amplitude);
    let theta_amplitude: f64 = r.get_or("ic", "theta_amplitude", "a number", ic_default.theta_amplitude);
    let seed: u64 = r.get_or("ic", "seed", "a non-negative integer", ic_default.seed);
    r.check(amplitude.is_finite(), "ic", "amplitude", "must be finite");
    r.check(theta_amplitude.is_finite(), "ic", "theta_amplitude", "must be finite");

    let diag_default = DiagConfig::default();
    let p_grid = r.list("diag", "p_grid").unwrap_or(diag_default.p_grid);
    r.check(
        p_grid.iter().all(|p| p.is_finite() && *p >= 1.0),
        "diag",
        "p_grid",
        "every exponent must be finite and >= 1",
    );
    let max_principle_tol: f64 = r.get_or("diag", "max_principle_tol", "a number", diag_default.max_principle_tol);
    let lp_drift_tol: f64 = r.get_or("diag", "lp_drift_tol", "a number", diag_default.lp_drift_tol);
    r.check(max_principle_tol >= 0.0, "diag", "max_principle_tol", "must be >= 0");
    r.check(lp_drift_tol >= 0.0, "diag", "lp_drift_tol", "must be >= 0");

    let out_default = OutputConfig::default();
    let directory = r
        .raw("output", "directory")
        .map(|(_, v)| PathBuf::from(v))
        .unwrap_or(out_default.directory);
    let snapshot_every: u64 = r.get_or("output", "snapshot_every", "a non-negative integer", 0);

    if !r.issues.is_empty() {
        r.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        return Err(Error::Parse(r.issues));
    }
    Ok(RunConfig {
        grid: GridConfig {
            dim: d,
            n: n.expect("validated"),
            dealias: dealias.expect("validated"),
        },
        model: ModelParams {
            dim: d,
            nu,
            kappa,
            alpha,
            buoyancy_axis,
        },
        stepper: StepperConfig {
            scheme,
            step,
            t_end,
            output_every,
            guard,
            keep_fields: false,
        },
        ic: IcSpec {
            name: ic_name,
            amplitude,
            theta_amplitude,
            seed,
        },
        diag: DiagConfig {
            p_grid,
            max_principle_tol,
            lp_drift_tol,
        },
        output: OutputConfig {
            directory,
            snapshot_every,
        },
    })
}

/// Shortest text that parses back to exactly `v`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format_f64(*x)).collect::<Vec<_>>().join(", ")
}

/// Canonical text of a configuration; `parse_config` inverts it exactly.
pub fn serialize_config(c: &RunConfig) -> String {
    let mut s = String::new();
    let f = format_f64;
    let _ = writeln!(s, "[grid]");
    let _ = writeln!(s, "dim = {}", c.grid.dim);
    let _ = writeln!(s, "n = {}", c.grid.n);
    let _ = writeln!(s, "dealias = {}", c.grid.dealias);
    let _ = writeln!(s, "\n[model]");
    let _ = writeln!(s, "nu = {}", list(&c.model.nu));
    let _ = writeln!(s, "kappa = {}", f(c.model.kappa));
    let _ = writeln!(s, "alpha = {}", f(c.model.alpha));
    let _ = writeln!(s, "buoyancy_axis = {}", c.model.buoyancy_axis);
    let _ = writeln!(s, "\n[stepper]");
    let _ = writeln!(s, "scheme = {}", c.stepper.scheme.name());
    match c.stepper.step {
        TimeStep::Fixed(dt) => {
            let _ = writeln!(s, "dt = {}", f(dt));
        }
        TimeStep::Adaptive { cfl, dt_max } => {
            let _ = writeln!(s, "dt = adaptive");
            let _ = writeln!(s, "cfl = {}", f(cfl));
            let _ = writeln!(s, "dt_max = {}", f(dt_max));
        }
    }
    let _ = writeln!(s, "t_end = {}", f(c.stepper.t_end));
    let _ = writeln!(s, "output_every = {}", c.stepper.output_every);
    let _ = writeln!(s, "guard = {}", f(c.stepper.guard));
    let _ = writeln!(s, "\n[ic]");
    let _ = writeln!(s, "name = {}", c.ic.name);
    let _ = writeln!(s, "amplitude = {}", f(c.ic.amplitude));
    let _ = writeln!(s, "theta_amplitude = {}", f(c.ic.theta_amplitude));
    let _ = writeln!(s, "seed = {}", c.ic.seed);
    let _ = writeln!(s, "\n[diag]");
    let _ = writeln!(s, "p_grid = {}", list(&c.diag.p_grid));
    let _ = writeln!(s, "max_principle_tol = {}", f(c.diag.max_principle_tol));
    let _ = writeln!(s, "lp_drift_tol = {}", f(c.diag.lp_drift_tol));
    let _ = writeln!(s, "\n[output]");
    let _ = writeln!(s, "directory = {}", c.output.directory.display());
    let _ = writeln!(s, "snapshot_every = {}", c.output.snapshot_every);
    s
}

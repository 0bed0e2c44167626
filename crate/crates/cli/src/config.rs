//! Run configuration: parsing, validation and the resolved key-value form.
//!
//! The format is TOML with the sections `[params]`, `[grid]`, `[run]`,
//! `[threshold]`, `[sweep]` and `[mc]`. A `[meta]` section is accepted and
//! ignored so that metadata sidecars can be fed back in unchanged.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fwm_core::langevin::{MIN_CELLS, MIN_SAMPLES, RNG_NAME};
use fwm_core::params::MediumParams;
use fwm_core::threshold::{FreeVariable, SweepAxis, SweepQuantity, SweepSpec};
use thiserror::Error;
use toml::{Table, Value};

const SCHEMA: &[(&str, &[&str])] = &[
    ("params", &["gamma_0", "omega_rabi", "delta", "kappa_l"]),
    ("grid", &["omega_min", "omega_max", "n_points"]),
    ("run", &["mode", "theta", "output"]),
    ("threshold", &["free"]),
    ("sweep", &["axis", "min", "max", "n_points", "spacing", "quantities", "omega", "hold_m_sq"]),
    ("mc", &["n_samples", "n_z", "seed"]),
];

/// Free-form section written into metadata sidecars.
const META_SECTION: &str = "meta";

/// Stand-in for a threshold-mode free variable left out of `[params]`.
const FREE_PLACEHOLDER: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Spectrum,
    Squeeze,
    Threshold,
    Sweep,
    McValidate,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Spectrum, Mode::Squeeze, Mode::Threshold, Mode::Sweep, Mode::McValidate];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Squeeze => "squeeze",
            Mode::Threshold => "threshold",
            Mode::Sweep => "sweep",
            Mode::McValidate => "mc-validate",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode '{s}' (expected spectrum, squeeze, threshold, sweep or mc-validate)"))
    }
}

/// Fourier-frequency grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn points(&self) -> Vec<f64> {
        linear(self.omega_min, self.omega_max, self.n_points)
    }
}

fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * (i as f64 / (n - 1) as f64) }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    pub fn name(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }
}

impl FromStr for Spacing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(format!("unknown spacing '{other}' (expected linear or log)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
    pub quantities: Vec<SweepQuantity>,
    /// Fourier frequency used for parameter axes.
    pub omega: f64,
    pub hold_m_sq: Option<f64>,
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => linear(self.min, self.max, self.n_points),
            Spacing::Log => {
                let mut v: Vec<f64> = linear(self.min.abs().ln(), self.max.abs().ln(), self.n_points)
                    .into_iter()
                    .map(|x| self.min.signum() * x.exp())
                    .collect();
                // keep the endpoints exact
                v[0] = self.min;
                if let Some(last) = v.last_mut() {
                    *last = self.max;
                }
                v
            }
        }
    }

    pub fn spec(&self, theta: Option<f64>) -> SweepSpec {
        SweepSpec {
            omega: self.omega,
            theta,
            hold_m_sq: self.hold_m_sq,
            ..SweepSpec::new(self.axis, self.values(), self.quantities.clone())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_samples: usize,
    pub n_z: usize,
    /// Grid point `i` uses `seed + i` (wrapping).
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_samples: 10_000, n_z: 256, seed: 0 }
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: MediumParams,
    pub grid: FrequencyGrid,
    pub mode: Mode,
    /// Quadrature phase override in radians.
    pub theta: Option<f64>,
    pub free: FreeVariable,
    pub sweep: Option<SweepConfig>,
    pub mc: McConfig,
    /// CSV destination; `None` writes to stdout.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    /// `section.key`, or just `section`.
    pub key: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid configuration: {}", .0.iter().map(Issue::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Issue>),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A `section.key = value` (or unambiguous `key = value`) override.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub key: String,
    pub value: String,
}

impl FromStr for Override {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.strip_prefix("--").unwrap_or(s);
        match s.split_once('=') {
            Some((k, v)) if !k.is_empty() => Ok(Override { key: k.to_string(), value: v.to_string() }),
            _ => Err(format!("override '{s}' is not of the form key=value")),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with_overrides(text, &[])
}

pub fn parse_config_with_overrides(text: &str, overrides: &[Override]) -> Result<RunConfig, ConfigError> {
    let mut table = parse_table(text)?;
    let mut issues = Vec::new();
    for o in overrides {
        if let Err(issue) = apply_override(&mut table, o) {
            issues.push(issue);
        }
    }
    let mut r = Reader { issues };
    let cfg = r.read(&table);
    match cfg {
        Some(cfg) if r.issues.is_empty() => Ok(cfg),
        _ => Err(ConfigError::Invalid(r.issues)),
    }
}

fn parse_table(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| {
        let start = e.span().map_or(0, |s| s.start).min(text.len());
        let before = &text[..start];
        let line = before.matches('\n').count() + 1;
        let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        ConfigError::Syntax { line, column, message: e.message().trim().to_string() }
    })
}

fn resolve_key(key: &str) -> Result<(&'static str, String), Issue> {
    let bad = |message: String| Issue { key: key.to_string(), message };
    if let Some((sec, k)) = key.split_once('.') {
        let (name, keys) =
            SCHEMA.iter().find(|(s, _)| *s == sec).ok_or_else(|| bad(format!("unknown section '{sec}'")))?;
        if !keys.contains(&k) {
            return Err(bad(format!("unknown key '{k}' in [{sec}]")));
        }
        return Ok((name, k.to_string()));
    }
    let hits: Vec<&'static str> = SCHEMA.iter().filter(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s).collect();
    match hits.as_slice() {
        [one] => Ok((one, key.to_string())),
        [] => Err(bad(format!("unknown key '{key}'"))),
        many => Err(bad(format!(
            "ambiguous key; qualify it as one of {}",
            many.iter().map(|s| format!("{s}.{key}")).collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn apply_override(table: &mut Table, o: &Override) -> Result<(), Issue> {
    let (sec, key) = resolve_key(&o.key)?;
    let entry = table.entry(sec).or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(key, parse_value(&o.value));
            Ok(())
        }
        _ => Err(Issue { key: sec.to_string(), message: "must be a table".into() }),
    }
}

struct Reader {
    issues: Vec<Issue>,
}

impl Reader {
    fn issue(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue { key: key.into(), message: message.into() });
    }

    fn sections<'a>(&mut self, root: &'a Table) -> Vec<Option<&'a Table>> {
        for (name, value) in root {
            if name == META_SECTION {
                continue;
            }
            let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| s == name) else {
                self.issue(name.clone(), format!("unknown section '{name}'"));
                continue;
            };
            match value {
                Value::Table(t) => {
                    for k in t.keys().filter(|k| !keys.contains(&k.as_str())) {
                        self.issue(format!("{name}.{k}"), format!("unknown key '{k}'"));
                    }
                }
                _ => self.issue(name.clone(), "must be a table"),
            }
        }
        SCHEMA.iter().map(|(s, _)| root.get(*s).and_then(Value::as_table)).collect()
    }

    fn get<'a>(&self, sec: Option<&'a Table>, key: &str) -> Option<&'a Value> {
        sec.and_then(|t| t.get(key))
    }

    fn float(&mut self, sec: Option<&Table>, name: &str, key: &str) -> Option<f64> {
        let v = self.get(sec, key)?;
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => {
                self.issue(format!("{name}.{key}"), format!("expected a number, got {}", v.type_str()));
                return None;
            }
        };
        if !x.is_finite() {
            self.issue(format!("{name}.{key}"), format!("must be finite, got {x}"));
            return None;
        }
        Some(x)
    }

    fn count(&mut self, sec: Option<&Table>, name: &str, key: &str, min: usize) -> Option<usize> {
        let v = self.get(sec, key)?;
        match v {
            Value::Integer(i) if *i >= min as i64 => Some(*i as usize),
            Value::Integer(i) => {
                self.issue(format!("{name}.{key}"), format!("must be at least {min}, got {i}"));
                None
            }
            _ => {
                self.issue(format!("{name}.{key}"), format!("expected an integer, got {}", v.type_str()));
                None
            }
        }
    }

    fn string<'a>(&mut self, sec: Option<&'a Table>, name: &str, key: &str) -> Option<&'a str> {
        let v = sec.and_then(|t| t.get(key))?;
        match v {
            Value::String(s) => Some(s),
            _ => {
                self.issue(format!("{name}.{key}"), format!("expected a string, got {}", v.type_str()));
                None
            }
        }
    }

    fn parsed<T: FromStr<Err = String>>(&mut self, sec: Option<&Table>, name: &str, key: &str) -> Option<T> {
        let s = self.string(sec, name, key)?;
        s.parse().map_err(|e| self.issue(format!("{name}.{key}"), e)).ok()
    }

    fn required<T>(&mut self, v: Option<T>, present: bool, key: &str) -> Option<T> {
        if v.is_none() && !present {
            self.issue(key, "missing required key");
        }
        v
    }

    fn read(&mut self, root: &Table) -> Option<RunConfig> {
        let secs = self.sections(root);
        let [params, grid, run, threshold, sweep, mc] = secs[..] else { unreachable!() };

        let mode_present = self.get(run, "mode").is_some();
        let mode = self.parsed::<Mode>(run, "run", "mode");
        let mode = self.required(mode, mode_present, "run.mode");
        let theta = self.float(run, "run", "theta");
        let output = self.string(run, "run", "output").map(PathBuf::from);
        let free = self.parsed::<FreeVariable>(threshold, "threshold", "free").unwrap_or(FreeVariable::KappaL);

        let params = self.read_params(params, mode, free);
        let grid = self.read_grid(grid);
        let sweep_cfg = match sweep {
            Some(t) => self.read_sweep(t),
            None => {
                if mode == Some(Mode::Sweep) {
                    self.issue("sweep", "sweep mode needs a [sweep] section");
                }
                None
            }
        };
        let mc = self.read_mc(mc);

        Some(RunConfig { params: params?, grid: grid?, mode: mode?, theta, free, sweep: sweep_cfg, mc: mc?, output })
    }

    fn read_params(&mut self, sec: Option<&Table>, mode: Option<Mode>, free: FreeVariable) -> Option<MediumParams> {
        let mut vals = [0.0; 4];
        let mut ok = true;
        for (i, key) in ["gamma_0", "omega_rabi", "delta", "kappa_l"].into_iter().enumerate() {
            let present = self.get(sec, key).is_some();
            let v = self.float(sec, "params", key);
            let optional = mode == Some(Mode::Threshold) && free.name() == key;
            match v {
                Some(x) => vals[i] = x,
                None if !present && optional => vals[i] = FREE_PLACEHOLDER,
                None => {
                    if !present {
                        self.issue(format!("params.{key}"), "missing required key");
                    }
                    ok = false;
                }
            }
        }
        if !ok {
            return None;
        }
        let [g0, om, d, kl] = vals;
        let errs = MediumParams::validate_all(g0, om, d, kl);
        for e in &errs {
            let key = match e {
                fwm_core::ParamError::NonPositive { name, .. }
                | fwm_core::ParamError::Negative { name, .. }
                | fwm_core::ParamError::NonFinite { name, .. } => name,
                fwm_core::ParamError::ZeroDetuning => "delta",
            };
            self.issue(format!("params.{key}"), e.to_string());
        }
        if errs.is_empty() {
            MediumParams::new(g0, om, d, kl).ok()
        } else {
            None
        }
    }

    fn read_grid(&mut self, sec: Option<&Table>) -> Option<FrequencyGrid> {
        let lo = self.float(sec, "grid", "omega_min");
        let hi = self.float(sec, "grid", "omega_max");
        let n = self.count(sec, "grid", "n_points", 1);
        let has = |k| sec.is_some_and(|t| t.contains_key(k));
        let lo = if has("omega_min") { lo? } else { 0.0 };
        let hi = if has("omega_max") { hi? } else { lo };
        let n = if has("n_points") { n? } else { 1 };
        if hi < lo {
            self.issue("grid.omega_max", format!("must not be below omega_min ({hi} < {lo})"));
            return None;
        }
        if n == 1 && hi != lo {
            self.issue("grid.n_points", "a single point needs omega_min = omega_max");
            return None;
        }
        if n > 1 && hi == lo {
            self.issue("grid.n_points", "several points need omega_max > omega_min");
            return None;
        }
        Some(FrequencyGrid { omega_min: lo, omega_max: hi, n_points: n })
    }

    fn read_sweep(&mut self, sec: &Table) -> Option<SweepConfig> {
        let s = Some(sec);
        let axis = self.parsed::<SweepAxis>(s, "sweep", "axis");
        let axis = self.required(axis, sec.contains_key("axis"), "sweep.axis");
        let min = self.float(s, "sweep", "min");
        let min = self.required(min, sec.contains_key("min"), "sweep.min");
        let max = self.float(s, "sweep", "max");
        let max = self.required(max, sec.contains_key("max"), "sweep.max");
        let n = self.count(s, "sweep", "n_points", 1);
        let n = self.required(n, sec.contains_key("n_points"), "sweep.n_points");
        let spacing =
            if sec.contains_key("spacing") { self.parsed(s, "sweep", "spacing") } else { Some(Spacing::Linear) };
        let omega = if sec.contains_key("omega") { self.float(s, "sweep", "omega") } else { Some(0.0) };
        let hold = self.float(s, "sweep", "hold_m_sq");
        let quantities = self.read_quantities(sec);

        if let Some(h) = hold {
            if !(h > 0.0 && h < 1.0) {
                self.issue("sweep.hold_m_sq", format!("must lie in (0, 1), got {h}"));
            }
            if axis == Some(SweepAxis::KappaL) {
                self.issue("sweep.hold_m_sq", "cannot hold |M|^2 while sweeping kappa_l");
            }
        }
        let (axis, min, max, n, spacing) = (axis?, min?, max?, n?, spacing?);
        if n == 1 && min != max {
            self.issue("sweep.n_points", "a single point needs min = max");
        }
        if n > 1 && min == max {
            self.issue("sweep.max", "several points need max != min");
        }
        if spacing == Spacing::Log && min * max <= 0.0 {
            self.issue("sweep.spacing", "log spacing needs min and max of the same sign, both non-zero");
        }
        Some(SweepConfig {
            axis,
            min,
            max,
            n_points: n,
            spacing,
            quantities: quantities?,
            omega: omega?,
            hold_m_sq: hold,
        })
    }

    fn read_quantities(&mut self, sec: &Table) -> Option<Vec<SweepQuantity>> {
        let names: Vec<String> = match sec.get("quantities") {
            None => return Some(vec![SweepQuantity::N1, SweepQuantity::N2, SweepQuantity::STheta]),
            Some(Value::String(s)) => s.split(',').map(|x| x.trim().to_string()).collect(),
            Some(Value::Array(a)) if a.iter().all(Value::is_str) => {
                a.iter().filter_map(Value::as_str).map(str::to_string).collect()
            }
            Some(_) => {
                self.issue("sweep.quantities", "expected an array of strings");
                return None;
            }
        };
        let mut out = Vec::new();
        for n in names {
            match n.parse::<SweepQuantity>() {
                Ok(q) if !out.contains(&q) => out.push(q),
                Ok(_) => {}
                Err(e) => self.issue("sweep.quantities", e),
            }
        }
        if out.is_empty() {
            self.issue("sweep.quantities", "at least one quantity is required");
            return None;
        }
        Some(out)
    }

    fn read_mc(&mut self, sec: Option<&Table>) -> Option<McConfig> {
        let d = McConfig::default();
        let has = |k| sec.is_some_and(|t| t.contains_key(k));
        let n_samples = self.count(sec, "mc", "n_samples", MIN_SAMPLES);
        let n_z = self.count(sec, "mc", "n_z", MIN_CELLS);
        let seed = match self.get(sec, "seed") {
            None => Some(d.seed),
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(Value::String(s)) if s.parse::<u64>().is_ok() => s.parse().ok(),
            Some(v) => {
                self.issue("mc.seed", format!("expected a non-negative integer, got {v}"));
                None
            }
        };
        Some(McConfig {
            n_samples: if has("n_samples") { n_samples? } else { d.n_samples },
            n_z: if has("n_z") { n_z? } else { d.n_z },
            seed: seed?,
        })
    }
}

fn float_repr(x: f64) -> String {
    // Debug formatting round-trips exactly and is valid TOML for finite values.
    format!("{x:?}")
}

fn str_repr(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

impl RunConfig {
    /// The complete configuration with every default filled in, as TOML.
    ///
    /// `run.output` is left out so that re-running a sidecar never overwrites the original CSV.
    pub fn to_toml(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        s += "[params]\n";
        s += &format!("gamma_0 = {}\n", float_repr(p.gamma_0()));
        s += &format!("omega_rabi = {}\n", float_repr(p.omega_rabi()));
        s += &format!("delta = {}\n", float_repr(p.delta()));
        s += &format!("kappa_l = {}\n", float_repr(p.kappa_l()));
        s += "\n[grid]\n";
        s += &format!("omega_min = {}\n", float_repr(self.grid.omega_min));
        s += &format!("omega_max = {}\n", float_repr(self.grid.omega_max));
        s += &format!("n_points = {}\n", self.grid.n_points);
        s += "\n[run]\n";
        s += &format!("mode = {}\n", str_repr(self.mode.name()));
        if let Some(t) = self.theta {
            s += &format!("theta = {}\n", float_repr(t));
        }
        s += "\n[threshold]\n";
        s += &format!("free = {}\n", str_repr(self.free.name()));
        if let Some(sw) = &self.sweep {
            s += "\n[sweep]\n";
            s += &format!("axis = {}\n", str_repr(sw.axis.name()));
            s += &format!("min = {}\n", float_repr(sw.min));
            s += &format!("max = {}\n", float_repr(sw.max));
            s += &format!("n_points = {}\n", sw.n_points);
            s += &format!("spacing = {}\n", str_repr(sw.spacing.name()));
            let q: Vec<String> = sw.quantities.iter().map(|q| str_repr(q.name())).collect();
            s += &format!("quantities = [{}]\n", q.join(", "));
            s += &format!("omega = {}\n", float_repr(sw.omega));
            if let Some(h) = sw.hold_m_sq {
                s += &format!("hold_m_sq = {}\n", float_repr(h));
            }
        }
        s += "\n[mc]\n";
        s += &format!("n_samples = {}\n", self.mc.n_samples);
        s += &format!("n_z = {}\n", self.mc.n_z);
        s += &format!("seed = {}\n", seed_repr(self.mc.seed));
        s
    }

    /// [`Self::to_toml`] followed by a `[meta]` section describing the build and RNG.
    pub fn metadata(&self) -> String {
        let mut s = self.to_toml();
        s += "\n[meta]\n";
        s += &format!("program = {}\n", str_repr("fwm"));
        s += &format!("version = {}\n", str_repr(env!("CARGO_PKG_VERSION")));
        s += &format!("seed = {}\n", seed_repr(self.mc.seed));
        s += &format!("rng = {}\n", str_repr(RNG_NAME));
        s += &format!("point_seeds = {}\n", str_repr("seed + grid index, wrapping"));
        s += &format!("units = {}\n", str_repr(crate::UNITS));
        s
    }
}

fn seed_repr(seed: u64) -> String {
    if seed <= i64::MAX as u64 {
        seed.to_string()
    } else {
        str_repr(&seed.to_string())
    }
}

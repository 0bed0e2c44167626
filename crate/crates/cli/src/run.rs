//! Mode dispatch and CSV assembly.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use fwm_core::greens::{spectrum_grid, GreensOptions, ThetaMode};
use fwm_core::langevin::{mc_spectrum, McOptions};
use fwm_core::params::{coupling_matrix, MediumParams, SMALL_OMEGA_LIMIT};
use fwm_core::threshold::{find_threshold, sweep, SweepQuantity};
use fwm_core::{m_function, GreensError, McError, SweepError, ThresholdError};
use thiserror::Error;

use crate::config::{Mode, RunConfig};
use crate::UNITS;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("monte carlo at omega = {omega}: {source}")]
    Mc { omega: f64, source: McError },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Threshold(_) => "threshold",
            RunError::Sweep(_) => "sweep",
            RunError::Mc { .. } => "monte_carlo",
            RunError::Io { .. } | RunError::Csv(_) => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    /// Resolved configuration plus run metadata, re-parseable as a config.
    pub metadata: String,
    pub rows: usize,
    /// Grid points flagged as diverged or failed.
    pub flagged_rows: usize,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn flags(list: &[String]) -> String {
    if list.is_empty() {
        "ok".into()
    } else {
        list.join(";")
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    flagged: usize,
}

impl Table {
    fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new(), flagged: 0 }
    }

    fn push(&mut self, mut row: Vec<String>, flag_list: &[String]) {
        if !flag_list.is_empty() {
            self.flagged += 1;
        }
        row.push(flags(flag_list));
        self.rows.push(row);
    }
}

fn beyond_small_omega(p: &MediumParams, omega: f64) -> bool {
    (omega / p.omega_rabi()).abs() > SMALL_OMEGA_LIMIT
}

fn warn_beyond(p: &MediumParams, omegas: &[f64]) {
    let n = omegas.iter().filter(|&&w| beyond_small_omega(p, w)).count();
    if n > 0 {
        log::warn!(
            "{n} of {} frequencies have |omega/Omega| > {SMALL_OMEGA_LIMIT}; flagged beyond_small_omega",
            omegas.len()
        );
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let table = match cfg.mode {
        Mode::Spectrum => spectrum(cfg, ThetaMode::Fixed(cfg.theta.unwrap_or(FRAC_PI_4))),
        Mode::Squeeze => spectrum(cfg, cfg.theta.map_or(ThetaMode::Optimal, ThetaMode::Fixed)),
        Mode::Threshold => threshold(cfg)?,
        Mode::Sweep => sweep_table(cfg)?,
        Mode::McValidate => mc_validate(cfg)?,
    };
    let mut out =
        format!("# fwm {} mode={}; units: {UNITS}\n", env!("CARGO_PKG_VERSION"), cfg.mode.name()).into_bytes();
    {
        let mut w = csv::WriterBuilder::new().from_writer(&mut out);
        w.write_record(&table.header)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| RunError::Csv(e.into()))?;
    }
    Ok(RunOutput {
        csv: String::from_utf8(out).expect("csv output is utf-8"),
        metadata: cfg.metadata(),
        rows: table.rows.len(),
        flagged_rows: table.flagged,
    })
}

fn spectrum(cfg: &RunConfig, theta: ThetaMode) -> Table {
    let p = &cfg.params;
    let omegas = cfg.grid.points();
    warn_beyond(p, &omegas);
    let mut t = Table::new(["omega", "n1", "n2", "s_theta", "theta", "m_sq", "flags"]);
    for (&w, r) in omegas.iter().zip(spectrum_grid(p, &omegas, theta, &GreensOptions::default())) {
        let mut fl = Vec::new();
        if beyond_small_omega(p, w) {
            fl.push("beyond_small_omega".to_string());
        }
        let row = match r {
            Ok(s) => vec![num(w), num(s.n1), num(s.n2), num(s.s_theta), num(s.theta), num(s.m_sq)],
            Err(e) => {
                fl.push(match e {
                    GreensError::AtThreshold { .. } => "diverged".to_string(),
                    other => format!("error: {other}"),
                });
                let m_sq = m_function(&coupling_matrix(p, w), 1.0).norm_sqr();
                vec![num(w), String::new(), String::new(), String::new(), String::new(), num(m_sq)]
            }
        };
        t.push(row, &fl);
    }
    t
}

fn threshold(cfg: &RunConfig) -> Result<Table, RunError> {
    let r = find_threshold(&cfg.params, cfg.free)?;
    let p = &r.params;
    let mut t = Table::new([
        "free_variable",
        "value_at_threshold",
        "eta_l",
        "residual",
        "gamma_0",
        "omega_rabi",
        "delta",
        "kappa_l",
        "flags",
    ]);
    let row = vec![
        r.free_variable.name().to_string(),
        num(r.value_at_threshold),
        num(r.eta_l_root),
        num(r.residual),
        num(p.gamma_0()),
        num(p.omega_rabi()),
        num(p.delta()),
        num(p.kappa_l()),
    ];
    t.push(row, &[]);
    Ok(t)
}

fn sweep_table(cfg: &RunConfig) -> Result<Table, RunError> {
    let sw = cfg.sweep.as_ref().expect("sweep mode is validated to carry a [sweep] section");
    let spec = sw.spec(cfg.theta);
    spec.validate()?;
    if sw.axis == fwm_core::SweepAxis::Omega {
        warn_beyond(&cfg.params, &spec.values);
    }
    let table = sweep(&cfg.params, &spec)?;
    let mut header = vec![sw.axis.name().to_string()];
    for q in &sw.quantities {
        header.push(q.name().to_string());
        if *q == SweepQuantity::STheta {
            header.push("theta".into());
        }
    }
    header.push("flags".into());
    let mut t = Table::new(header);
    for r in &table.rows {
        let mut row = vec![num(r.value)];
        for q in &sw.quantities {
            match q {
                SweepQuantity::N1 => row.push(opt(r.n1)),
                SweepQuantity::N2 => row.push(opt(r.n2)),
                SweepQuantity::STheta => {
                    row.push(opt(r.s_theta));
                    row.push(opt(r.theta));
                }
                SweepQuantity::MAbs => row.push(opt(r.m_abs)),
                SweepQuantity::ThresholdMargin => row.push(opt(r.threshold_margin)),
            }
        }
        let mut fl = Vec::new();
        if r.diverged {
            fl.push("diverged".to_string());
        }
        if let Some(e) = &r.error {
            fl.push(format!("error: {e}"));
        }
        if sw.quantities.contains(&SweepQuantity::ThresholdMargin) && r.threshold_margin.is_none() && r.error.is_none()
        {
            fl.push("no_threshold".to_string());
        }
        t.push(row, &fl);
    }
    Ok(t)
}

fn mc_validate(cfg: &RunConfig) -> Result<Table, RunError> {
    let p = &cfg.params;
    let theta = cfg.theta.unwrap_or(FRAC_PI_4);
    let omegas = cfg.grid.points();
    warn_beyond(p, &omegas);
    let exact = spectrum_grid(p, &omegas, ThetaMode::Fixed(theta), &GreensOptions::default());
    let mut t = Table::new([
        "omega",
        "theta",
        "analytic_n1",
        "mc_n1",
        "mc_n1_stderr",
        "analytic_n2",
        "mc_n2",
        "mc_n2_stderr",
        "analytic_S",
        "mc_S",
        "mc_stderr",
        "n_samples",
        "flagged_samples",
        "seed",
        "flags",
    ]);
    for (i, (&w, a)) in omegas.iter().zip(exact).enumerate() {
        let seed = cfg.mc.seed.wrapping_add(i as u64);
        let mut fl = Vec::new();
        if beyond_small_omega(p, w) {
            fl.push("beyond_small_omega".to_string());
        }
        let a = match a {
            Ok(a) => a,
            Err(e) => {
                fl.push(match e {
                    GreensError::AtThreshold { .. } => "diverged".to_string(),
                    other => format!("error: {other}"),
                });
                let mut row = vec![num(w), num(theta)];
                row.extend(std::iter::repeat_n(String::new(), 11));
                row.push(seed.to_string());
                t.push(row, &fl);
                continue;
            }
        };
        let opts = McOptions { n_samples: cfg.mc.n_samples, n_z: cfg.mc.n_z, seed, ..Default::default() };
        let m = mc_spectrum(p, w, theta, &opts).map_err(|source| RunError::Mc { omega: w, source })?;
        let pairs = [(a.n1, m.n1), (a.n2, m.n2), (a.s_theta, m.s_theta)];
        if pairs.iter().any(|(x, e)| (x - e.mean).abs() >= 3.0 * e.std_error) {
            fl.push("outside_3_stderr".to_string());
        }
        let mut row = vec![num(w), num(theta)];
        for (x, e) in pairs {
            row.extend([num(x), num(e.mean), num(e.std_error)]);
        }
        row.extend([m.s_theta.n_samples.to_string(), m.flagged.to_string(), seed.to_string()]);
        t.push(row, &fl);
    }
    Ok(t)
}

/// `out.csv` → `out.meta.toml`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

/// Writes the CSV and its metadata sidecar; returns the sidecar path.
pub fn write_outputs(out: &RunOutput, csv_path: &Path) -> Result<PathBuf, RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    std::fs::write(csv_path, &out.csv).map_err(io(csv_path))?;
    let meta = sidecar_path(csv_path);
    std::fs::write(&meta, &out.metadata).map_err(io(&meta))?;
    Ok(meta)
}

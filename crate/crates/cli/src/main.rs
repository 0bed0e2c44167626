use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fwm_cli::config::{parse_config_with_overrides, ConfigError, Mode, Override};
use fwm_cli::run::{run, write_outputs};
use fwm_cli::{parse_threads, CliError, THREADS_ENV};

/// Quantum-noise spectra of four-wave mixing in a double-Λ medium.
///
/// Any configuration key can be overridden with `--section.key=value`, or
/// `--key=value` when the key name is unique across sections.
#[derive(Debug, Parser)]
#[command(name = "fwm", version)]
struct Cli {
    #[command(subcommand)]
    mode: Option<ModeCmd>,
    /// TOML configuration file (a metadata sidecar works too).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path; a `.meta.toml` sidecar is written next to it. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Quadrature phase in radians.
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum ModeCmd {
    /// n1, n2 and S_theta over the frequency grid at a fixed phase (default pi/4).
    Spectrum,
    /// As `spectrum` with the phase optimized at every frequency.
    Squeeze,
    /// Oscillation threshold in the chosen free variable.
    Threshold,
    /// One-parameter sweep.
    Sweep,
    /// Monte-Carlo against analytic spectra.
    #[command(name = "mc-validate")]
    McValidate,
}

impl From<ModeCmd> for Mode {
    fn from(m: ModeCmd) -> Self {
        match m {
            ModeCmd::Spectrum => Mode::Spectrum,
            ModeCmd::Squeeze => Mode::Squeeze,
            ModeCmd::Threshold => Mode::Threshold,
            ModeCmd::Sweep => Mode::Sweep,
            ModeCmd::McValidate => Mode::McValidate,
        }
    }
}

const FLAGS: &[&str] = &["config", "out", "seed", "samples", "theta", "quiet", "help", "version"];

/// Separates `--key=value` configuration overrides from the clap arguments.
fn split_overrides(args: impl IntoIterator<Item = String>) -> (Vec<String>, Vec<Override>) {
    let mut clap_args = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        let known = a.strip_prefix("--").and_then(|s| s.split_once('=')).is_none_or(|(k, _)| FLAGS.contains(&k));
        match (known, a.parse::<Override>()) {
            (false, Ok(o)) => overrides.push(o),
            _ => clap_args.push(a),
        }
    }
    (clap_args, overrides)
}

fn execute(cli: &Cli, mut overrides: Vec<Override>) -> Result<(), CliError> {
    if let Some(n) = parse_threads(std::env::var(THREADS_ENV).ok().as_deref())? {
        // fails only if the global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?,
        None => String::new(),
    };
    let set = |k: &str, v: String| Override { key: k.into(), value: v };
    if let Some(m) = cli.mode {
        overrides.push(set("run.mode", format!("\"{}\"", Mode::from(m).name())));
    }
    if let Some(s) = cli.seed {
        overrides.push(set("mc.seed", format!("\"{s}\"")));
    }
    if let Some(n) = cli.samples {
        overrides.push(set("mc.n_samples", n.to_string()));
    }
    if let Some(t) = cli.theta {
        overrides.push(set("run.theta", format!("{t:?}")));
    }
    let cfg = parse_config_with_overrides(&text, &overrides)?;
    let out_path = cli.out.clone().or_else(|| cfg.output.clone());
    let out = run(&cfg)?;
    match out_path {
        Some(path) => {
            let meta = write_outputs(&out, &path)?;
            log::info!("wrote {} rows to {} (metadata {})", out.rows, path.display(), meta.display());
        }
        None => print!("{}", out.csv),
    }
    if out.flagged_rows > 0 {
        log::warn!("{} of {} rows carry flags", out.flagged_rows, out.rows);
    }
    Ok(())
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args());
    let cli = Cli::parse_from(args);
    let default_level = if cli.quiet { "error" } else { "info,fwm_core=error" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level)).init();
    match execute(&cli, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

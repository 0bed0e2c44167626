//! Command-line front end for the `fwm_core` simulator.
//!
//! Reads a TOML run description, evaluates spectra, thresholds, sweeps or
//! Monte-Carlo cross-checks, and writes CSV plus a metadata sidecar.

pub mod config;
pub mod run;

use serde_json::json;
use thiserror::Error;

use config::{ConfigError, Issue};
use run::RunError;

/// Unit convention echoed in every CSV and sidecar.
pub const UNITS: &str = "frequencies and rates in units of gamma_a, c = 1, lengths in units of L, theta in radians";

/// Environment variable sizing the worker pool.
pub const THREADS_ENV: &str = "FWM_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{THREADS_ENV} must be a positive integer, got '{0}'")]
    Threads(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Threads(_) => 2,
            CliError::Run(_) => 1,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        let issues = |v: &[Issue]| v.iter().map(|i| json!({ "key": i.key, "message": i.message })).collect::<Vec<_>>();
        let v = match self {
            CliError::Config(ConfigError::Syntax { line, column, message }) => json!({
                "status": "error", "kind": "config_syntax", "message": self.to_string(),
                "line": line, "column": column, "detail": message,
            }),
            CliError::Config(ConfigError::Invalid(v)) => json!({
                "status": "error", "kind": "config_invalid", "message": self.to_string(), "issues": issues(v),
            }),
            CliError::Config(ConfigError::Io { path, .. }) => json!({
                "status": "error", "kind": "config_io", "message": self.to_string(), "path": path,
            }),
            CliError::Run(e) => json!({ "status": "error", "kind": e.kind(), "message": self.to_string() }),
            CliError::Threads(_) => json!({ "status": "error", "kind": "environment", "message": self.to_string() }),
        };
        v.to_string()
    }
}

/// Parses a thread-count override; `None` or empty keeps the default pool.
pub fn parse_threads(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Threads(s.to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_override() {
        assert_eq!(parse_threads(None).unwrap(), None);
        assert_eq!(parse_threads(Some("4")).unwrap(), Some(4));
        assert!(parse_threads(Some("0")).is_err());
        assert!(parse_threads(Some("many")).is_err());
    }

    #[test]
    fn error_record_is_json() {
        let e =
            CliError::from(ConfigError::Invalid(vec![Issue { key: "params.delta".into(), message: "zero".into() }]));
        let v: serde_json::Value = serde_json::from_str(&e.record()).unwrap();
        assert_eq!(v["kind"], "config_invalid");
        assert_eq!(v["issues"][0]["key"], "params.delta");
        assert_eq!(e.exit_code(), 2);
    }
}

//! `fringewire <scenario> [--key value]... [--config path] [--output path] [--format csv|json] [--seed N]`
//!
//! Exit status: 0 on success with every duality check satisfied, 1 on a
//! configuration or I/O error, 2 when a physical invariant is violated.

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use config::{Format, Output, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid `{key}`: {reason}")]
    Key { key: String, reason: String },
    #[error(transparent)]
    Simulation(#[from] crate::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Rendered output of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub violation: bool,
}

/// Parse, validate and run; nothing is written.
pub fn execute(args: &[String]) -> Result<(RunConfig, Outcome), CliError> {
    let (scenario, raw) = config::parse_args(args)?;
    let cfg = RunConfig::resolve(scenario, &raw)?;
    let report = commands::run(&cfg)?;
    let violation = report.checks.iter().any(|c| c.physical && !c.passed);
    let body = match cfg.format {
        Format::Csv => report.table.render(),
        Format::Json => {
            let doc = output::object(vec![
                ("scenario", Value::String(cfg.scenario.name().into())),
                (
                    "config_echo",
                    serde_json::to_value(cfg.echo()).expect("string map"),
                ),
                ("results", report.results),
                ("checks", output::to_value(&report.checks)),
            ]);
            let mut s = serde_json::to_string_pretty(&doc).expect("json value");
            s.push('\n');
            s
        }
    };
    Ok((cfg, Outcome { body, violation }))
}

/// Write to a sibling temporary file and rename, so a failed run never
/// leaves a partial output behind.
fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

/// Entry point used by the binary; returns the process exit status.
pub fn main_with_args(args: &[String]) -> i32 {
    let (cfg, outcome) = match execute(args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("fringewire: {e}");
            return EXIT_INVALID;
        }
    };
    let written = match &cfg.output {
        Output::Stdout => std::io::stdout().write_all(outcome.body.as_bytes()),
        Output::File(p) => write_atomic(p, &outcome.body),
    };
    if let Err(e) = written {
        eprintln!("fringewire: cannot write output: {e}");
        return EXIT_INVALID;
    }
    if outcome.violation {
        eprintln!("fringewire: complementarity inequality violated");
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

//! Library side of the `heatbound` command-line tool.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use heatbound_core::config::{parse_config, RunConfig};
use heatbound_core::verify::CheckId;
use heatbound_core::Error;

pub mod commands;
pub mod output;

pub use commands::{execute, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Neumann eigenvalues with multiplicities.
    Spectrum,
    /// Heat trace with its bounds on the time grid.
    Trace,
    /// Every closed-form bound over the time and index grids.
    Bounds,
    /// Full inequality suite; exit status 1 on any failure.
    Verify,
    /// Human-readable summary plus plot columns.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Trace => "trace",
            Command::Bounds => "bounds",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "heatbound",
    version,
    about = "Neumann heat-kernel and eigenvalue bounds on model caps"
)]
pub struct Args {
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.path`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated check ids; overrides `checks`.
    #[arg(long, value_delimiter = ',')]
    pub checks: Option<Vec<String>>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration, geometry and I/O problems, 3 for solver and
    /// truncation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Solver { .. } | Error::Truncation(_)) => 3,
            _ => 2,
        }
    }
}

/// Reads the configuration and applies command-line overrides.
pub fn load_config(args: &Args) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut config =
        parse_config(&text).map_err(|e| Error::Config(format!("{}: {}", args.config.display(), strip_prefix(&e))))?;
    if let Some(out) = &args.out {
        config.output.path = out.to_string_lossy().into_owned();
    }
    if let Some(ids) = &args.checks {
        config.checks = ids.iter().map(|s| s.parse::<CheckId>()).collect::<Result<_, _>>()?;
    }
    Ok(config)
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// Caps the worker pool when `HEATBOUND_THREADS` holds a positive integer.
pub fn configure_threads() {
    if let Some(n) = std::env::var("HEATBOUND_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            // Fails only if a pool already exists, which keeps the earlier setting.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

//! Batch driver for `beamctl-core`.
//!
//! `beamctl <command> --config <path> [--out <dir>] [--threads N] [--seed S]`
//!
//! Exit status: 0 when every asserted quantity passed, 1 on a numerical
//! failure, 2 on a config error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::fmt;
use std::io;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use config::{ConfigError, ExperimentConfig};
use output::Artifacts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Observability,
    StrategicCheck,
    Control,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Observability => "observability",
            Self::StrategicCheck => "strategic-check",
            Self::Control => "control",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "beamctl", version, about = "Exact-controllability experiments for a hinged-sliding beam")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Flat `key = value` experiment file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seed for randomized parts; overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) | Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Numerical(e) => write!(f, "numerical failure: {e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

/// What a successful run produced.
#[derive(Debug)]
pub struct Outcome {
    pub failures: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

/// Parses the config, runs the command and writes its artifacts.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        CliError::Config(ConfigError { line: None, message: format!("cannot read {}: {e}", cli.config.display()) })
    })?;
    let mut cfg = ExperimentConfig::parse(&text, cli.command)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("beamctl-out"));
    if cli.threads == Some(0) {
        return Err(CliError::Config(ConfigError { line: None, message: "--threads must be positive".into() }));
    }

    let work = || -> Result<Outcome, CliError> {
        let mut art = Artifacts::new(&out)?;
        let failures = match cli.command {
            Command::Simulate => commands::simulate(&cfg, &mut art)?,
            Command::Observability => commands::observability(&cfg, &mut art)?,
            Command::StrategicCheck => commands::strategic(&cfg, &mut art)?,
            Command::Control => commands::control(&cfg, &mut art)?,
            Command::Sweep => commands::run_sweep(&cfg, &mut art)?,
        };
        Ok(Outcome { failures, artifacts: art.written().to_vec() })
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Numerical(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Runs from command-line arguments, reporting to stdout/stderr; returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            for f in &outcome.failures {
                eprintln!("FAILED: {f}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

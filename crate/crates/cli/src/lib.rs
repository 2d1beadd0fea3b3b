//! Command-line driver for the nonlocal diffusion experiments: JSON
//! configuration, deterministic CSV tables and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod selftest;
pub mod svg;
pub mod table;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use commands::{run_command, CommandOutput};
pub use config::{CommandId, ForcingKind, NuGrid, RunConfig};
pub use error::{CliError, CliResult, EXIT_ASSERTION, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PASS};
pub use table::{Cell, CsvTable};

/// Fallback for `--threads`.
pub const THREADS_ENV: &str = "NLDIFF_THREADS";
pub const DEFAULT_OUT: &str = "nldiff-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Parser)]
#[command(
    name = "nldiff",
    version,
    about = "Nonlocal diffusion on periodic tori"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandId,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (falls back to NLDIFF_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the command's main assertion tolerance.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub svg: Option<Toggle>,
}

impl Cli {
    /// The configuration file (or defaults) with the flags applied on top.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(c) = cfg.command {
            if c != self.command {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    self.command.name()
                )));
            }
        }
        cfg.command = Some(self.command);
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(t) = self.tolerance {
            cfg.tolerance = Some(t);
        }
        if let Some(svg) = self.svg {
            cfg.svg = svg == Toggle::On;
        }
        if let Some(n) = self.threads {
            cfg.threads = Some(n);
        } else if cfg.threads.is_none() {
            if let Ok(v) = std::env::var(THREADS_ENV) {
                let n = v.trim().parse().map_err(|_| {
                    CliError::Config(format!("{THREADS_ENV} must be a positive integer"))
                })?;
                cfg.threads = Some(n);
            }
        }
        if cfg.threads == Some(0) {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        Ok(cfg)
    }
}

/// Runs the configured command on a pool of `cfg.threads` workers.
pub fn run_with_threads(cfg: &RunConfig) -> CliResult<CommandOutput> {
    match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_command(cfg))
        }
        None => run_command(cfg),
    }
}

/// Full CLI behaviour; returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = cli.resolve().and_then(|cfg| {
        let out = run_with_threads(&cfg)?;
        let dir = cfg
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let written = out.write(&dir, cfg.svg)?;
        Ok((out, written))
    });
    match result {
        Ok((out, written)) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            for m in out
                .report
                .measurements
                .iter()
                .filter(|m| m.pass == Some(false))
            {
                println!("FAIL {} = {}", m.name, m.value);
            }
            if out.pass() {
                println!("{}: PASS", out.command.name());
                EXIT_PASS
            } else {
                println!("{}: FAIL", out.command.name());
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

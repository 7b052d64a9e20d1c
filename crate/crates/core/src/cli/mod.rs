//! The `heavytail` command line.
//!
//! Exit codes: 0 on success, 2 on a configuration or usage error, 3 when a
//! demanded numerical result was not obtained.

pub mod args;
pub mod commands;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{parse_grid, Cli, Command, RunConfig};
pub use commands::{build_spec, execute, Context, Outcome, Table};

use crate::error::Error;
use crate::mc::{default_workers, McConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const DEFAULT_SEED: u64 = 1;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_cli(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("heavytail: error: {e}");
            exit_code(&e)
        }
    }
}

fn run_cli(cli: Cli) -> crate::Result<i32> {
    let config_path = cli.config.clone();
    let save_path = cli.save_config.clone();
    let top = RunConfig::from(cli);
    let cfg = match &config_path {
        Some(p) => RunConfig::read(p)?.overlaid(&top)?,
        None => top,
    };
    if let Some(p) = &save_path {
        std::fs::write(p, cfg.to_toml())?;
    }
    let command = cfg
        .command
        .as_ref()
        .ok_or_else(|| Error::Config("no subcommand given (see --help)".into()))?;
    let mc = McConfig { seed: cfg.run.seed.unwrap_or(DEFAULT_SEED), workers: cfg.run.workers.unwrap_or_else(default_workers).max(1) };
    let ctx = Context { model: &cfg.model, mc, out: cfg.run.out.as_deref() };
    let outcome = execute(command, &ctx)?;
    let csv = outcome.table.to_csv()?;
    match &cfg.run.out {
        Some(p) => std::fs::write(p, csv)?,
        None => std::io::stdout().lock().write_all(&csv)?,
    }
    for (path, bytes) in &outcome.files {
        std::fs::write(path, bytes)?;
    }
    eprintln!("heavytail {}: {}", command.name(), outcome.summary);
    Ok(if outcome.status_failure { EXIT_NUMERICAL } else { EXIT_OK })
}

//! `rollgeo`: run rolling-sphere experiments described by a TOML config.
//!
//! Exit status 0 on success, 1 for invalid input, 2 for numerical failure
//! (degenerate geometry, rank deficiency, non-convergence).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "rollgeo", version, about = "Rolling-sphere path experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the configured path and write its trajectory.
    Roll(Common),
    /// Bend the path at five times and write the bent trajectory.
    Bend(Common),
    /// Analytic and finite-difference endpoint Jacobians with an audit of
    /// the quoted closed forms.
    Jacobian(Common),
    /// Trace the curve that keeps the configured plane relation.
    Trace(Common),
    /// Classify the path: consistent with a geodesic, not minimizing, or
    /// inconclusive.
    Verify(Common),
    /// Search for a bend reaching a later point of the path at equal length.
    Shortcut(Common),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] rollgeo_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Roll(c) => commands::roll(c),
        Command::Bend(c) => commands::bend(c),
        Command::Jacobian(c) => commands::jacobian(c),
        Command::Trace(c) => commands::trace(c),
        Command::Verify(c) => commands::verify(c),
        Command::Shortcut(c) => commands::shortcut(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rollgeo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

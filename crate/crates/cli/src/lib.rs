//! Command-line front end: scenario files, path ingestion and JSON reports.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{Outcome, Overrides};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "brp", version, about = "Branched rough path integration toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (give it twice for `metrics`).
    #[arg(long, global = true)]
    pub config: Vec<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of dyadic refinement levels.
    #[arg(long, global = true)]
    pub refine: Option<usize>,
    /// Seed for generated paths and random instances.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lift samples to a branched rough path and dump it.
    Lift,
    /// Integrate the one-form along the lifted path.
    Integrate,
    /// Run an invariant suite: algebra, analysis or pi.
    Verify {
        #[arg(long)]
        suite: String,
    },
    /// p-variations of two paths and their d_p distance.
    Metrics,
}

fn one_config(cli: &Cli) -> Result<config::Loaded, CliError> {
    match cli.config.as_slice() {
        [path] => config::load(path),
        [] => Err(CliError::Input("--config is required".into())),
        _ => Err(CliError::Input("expected a single --config".into())),
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let o = Overrides { refine: cli.refine, seed: cli.seed };
    match &cli.command {
        Command::Lift => commands::cmd_lift(&one_config(cli)?, o),
        Command::Integrate => commands::cmd_integrate(&one_config(cli)?, o),
        Command::Verify { suite } => {
            let cfg = if cli.config.is_empty() { None } else { Some(one_config(cli)?) };
            commands::cmd_verify(cfg.as_ref(), suite, o)
        }
        Command::Metrics => match cli.config.as_slice() {
            [a, b] => commands::cmd_metrics(&config::load(a)?, &config::load(b)?, o),
            _ => Err(CliError::Input("metrics needs --config twice".into())),
        },
    }
}

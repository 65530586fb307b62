//! Command-line front end for `phylonet`: analytic summaries, simulation
//! output and the verification suites.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod suites;

use std::io::Write;

use clap::{Parser, Subcommand};

use crate::commands::Rendered;
use crate::config::{Format, Overrides, RunConfig};
use crate::error::{CliError, Result};
use crate::report::Envelope;
use crate::suites::Suite;

#[derive(Debug, Parser)]
#[command(name = "phylonet", version, about = "Random phylogenetic networks: numerics, simulation and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Overrides,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Offspring mean, extinction, tilt, growth rate and scaling constants.
    Analyze,
    /// Lower and upper convergents of g on a grid in [0, 1].
    GfunTable {
        #[arg(long, default_value_t = 0.1)]
        z_step: f64,
        #[arg(long, default_value_t = 20)]
        max_depth: usize,
    },
    /// One glued network with `--n` colors.
    Simulate,
    /// Contour process of a glued network.
    Contour,
    /// A ball of radius `--radius` in the local limit.
    LocalBall,
    /// Runs a verification suite; exits 1 if any check fails.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::GfunTable { .. } => "gfun-table",
            Command::Simulate => "simulate",
            Command::Contour => "contour",
            Command::LocalBall => "local-ball",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Exit status of a run that produced output.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match try_run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn try_run(cli: Cli) -> Result<i32> {
    let cfg = RunConfig::from_overrides(cli.flags)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let command = cli.command;
    pool.install(|| execute(&command, &cfg))
}

fn execute(command: &Command, cfg: &RunConfig) -> Result<i32> {
    let (rendered, code) = match command {
        Command::Analyze => (commands::analyze(cfg)?, EXIT_OK),
        Command::GfunTable { z_step, max_depth } => (commands::gfun_table(cfg, *z_step, *max_depth)?, EXIT_OK),
        Command::Simulate => (commands::simulate(cfg)?, EXIT_OK),
        Command::Contour => (commands::contour(cfg)?, EXIT_OK),
        Command::LocalBall => (commands::local_ball(cfg)?, EXIT_OK),
        Command::Verify { suite } => {
            let (r, report) = commands::verify(cfg, *suite)?;
            (r, if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    };
    emit(command.name(), cfg, rendered)?;
    Ok(code)
}

fn emit(command: &str, cfg: &RunConfig, rendered: Rendered) -> Result<()> {
    let body = match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&Envelope::new(command, cfg, rendered.json))?;
            s.push('\n');
            s
        }
        f => rendered.text(f, command)?.to_string(),
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

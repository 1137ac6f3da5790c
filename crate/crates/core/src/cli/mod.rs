//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on I/O failure, 2 on invalid configuration
//! or usage, 3 when a required closed-form result does not apply.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use config::{AgentChoice, Overrides, RunConfig, SweepParam};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Inapplicable(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Inapplicable(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotApplicable(_) => CliError::Inapplicable(e.to_string()),
            Error::InvalidConfig(_) | Error::InvalidHorizon(_) => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "driftsim",
    version,
    about = "Opinion drift under recommendation: closed forms and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Worker threads; defaults to the number of CPUs. Results do not
    /// depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            horizon: self.horizon,
        }
    }

    fn resolve(&self, base: RunConfig) -> Result<RunConfig, CliError> {
        config::resolve(base, self.config.as_deref(), &self.overrides())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Population histograms at two horizons.
    Fig1,
    /// Single-agent series under a fixed recommendation.
    Fig2,
    /// Sweep of the bound and the paired utility difference.
    Fig3,
    /// Single-agent series under an exploring platform.
    Fig4,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form expectations, limits, thresholds, and the advantage bound.
    Analytic {
        #[command(flatten)]
        common: Common,
        /// Exit with code 3 if the advantage bound does not apply.
        #[arg(long)]
        require_bound: bool,
    },
    /// Monte Carlo series for one or both agent policies.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        policy: Option<AgentChoice>,
    },
    /// Exact expectations by enumerating every click path (short horizons).
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        policy: Option<AgentChoice>,
    },
    /// Many agents with sampled innate opinions and recommendations.
    Population {
        #[command(flatten)]
        common: Common,
    },
    /// Forced-reduction policies on shared randomness, checked for dominance.
    Couple {
        #[command(flatten)]
        common: Common,
        /// Reduction times of the first policy, comma separated.
        #[arg(long, value_delimiter = ',')]
        schedule_a: Option<Vec<usize>>,
        /// Reduction times of the second policy; must contain the first.
        #[arg(long, value_delimiter = ',')]
        schedule_b: Option<Vec<usize>>,
    },
    /// Regenerate the data behind one of the standard figures.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        /// Swept parameter for fig3.
        #[arg(long, value_enum)]
        sweep: Option<SweepParam>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Analytic { common, .. }
            | Command::Simulate { common, .. }
            | Command::Enumerate { common, .. }
            | Command::Population { common }
            | Command::Couple { common, .. }
            | Command::Reproduce { common, .. } => common,
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let workers = cli.command.common().workers;
    match workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analytic {
            common,
            require_bound,
        } => {
            let cfg = common.resolve(RunConfig::fig2())?;
            commands::analytic(&cfg, &common.out, require_bound)
        }
        Command::Simulate { common, policy } => {
            let mut cfg = common.resolve(RunConfig::fig2())?;
            if let Some(p) = policy {
                cfg.agent_policy = p;
            }
            commands::simulate(&cfg, &common.out, "simulate", "simulate.csv")
        }
        Command::Enumerate { common, policy } => {
            let mut cfg = common.resolve(RunConfig::enumerate())?;
            if let Some(p) = policy {
                cfg.agent_policy = p;
            }
            commands::enumerate(&cfg, &common.out)
        }
        Command::Population { common } => {
            let cfg = common.resolve(RunConfig::fig1())?;
            commands::population(&cfg, &common.out, "population", "population")
        }
        Command::Couple {
            common,
            schedule_a,
            schedule_b,
        } => {
            let mut cfg = common.resolve(RunConfig::couple())?;
            if let Some(a) = schedule_a {
                cfg.schedule = a;
            }
            if let Some(b) = schedule_b {
                cfg.schedule_b = b;
            }
            commands::couple(&cfg, &common.out)
        }
        Command::Reproduce {
            figure,
            sweep,
            common,
        } => match figure {
            Figure::Fig1 => {
                let cfg = common.resolve(RunConfig::fig1())?;
                commands::population(&cfg, &common.out, "reproduce fig1", "fig1")
            }
            Figure::Fig2 => {
                let cfg = common.resolve(RunConfig::fig2())?;
                commands::simulate(&cfg, &common.out, "reproduce fig2", "fig2.csv")
            }
            Figure::Fig3 => {
                let mut cfg = common.resolve(RunConfig::fig3())?;
                if let Some(p) = sweep {
                    cfg.sweep = p;
                }
                commands::sweep(&cfg, &common.out)
            }
            Figure::Fig4 => {
                let cfg = common.resolve(RunConfig::fig4())?;
                commands::simulate(&cfg, &common.out, "reproduce fig4", "fig4.csv")
            }
        },
    }
}

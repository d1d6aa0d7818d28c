//! `accel-admm`: run experiments, compare schedules and check certificates.
//!
//! Exit status: 0 on success, 1 on configuration or I/O errors, 2 on failed runs,
//! failed properties, or (with `verify`) certificate violations.

mod compare;
mod config;
mod output;
mod run;
mod verify;

use accel_admm::engine::Fault;
use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "accel-admm",
    version,
    about = "Accelerated linearized ADMM experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated artifact list from csv, json, svg; overrides `emit`.
    #[arg(long)]
    emit: Option<String>,
    /// Only solver entries whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
    /// Generator seed; overrides the seed in `problem`.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Result<run::Overrides> {
        Ok(run::Overrides {
            out: self.out.clone(),
            emit: self
                .emit
                .as_deref()
                .map(config::Emit::parse_list)
                .transpose()?,
            filter: self.filter.clone(),
            seed: self.seed,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    DualStepLagsIndex,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver entry and write report.json, trajectories and plots.
    Run(Common),
    /// Run the first solver entry under each listed schedule rule.
    CompareSchedules(Common),
    /// Run the property suite and print a JSON summary.
    Verify {
        /// Adds the configured problem to the built-in instances.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Only properties whose group or name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Seed of the built-in quadratic instance.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write verify.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Inject a known defect into the engine (mutation check of the suite itself).
        #[arg(long, value_enum, hide = true)]
        fault: Option<FaultArg>,
    },
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run(c) => run::cmd_run(&c.config, &c.overrides()?),
        Command::CompareSchedules(c) => compare::cmd_compare_schedules(&c.config, &c.overrides()?),
        Command::Verify {
            config,
            filter,
            seed,
            out,
            fault,
        } => verify::cmd_verify(&verify::VerifyOptions {
            config: config.as_deref(),
            filter: filter.as_deref(),
            seed,
            out: out.as_deref(),
            fault: fault.map(|FaultArg::DualStepLagsIndex| Fault::DualStepLagsIndex),
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

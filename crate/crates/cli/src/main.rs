//! `monodsm gallery | verify | flow | solve`
//!
//! Exit status: 0 when every certificate passes, 1 when one fails, 2 for
//! usage or configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::RunArgs;

#[derive(Parser)]
#[command(name = "monodsm", version, about = "Regularized flow solver for monotone equations F(u) = h")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in operators with their dimension policy and declared flags.
    Gallery,
    /// Sample-check monotonicity, coercivity and Jacobian semidefiniteness.
    Verify(RunArgs),
    /// Run the flow at a fixed --a, write its trace and check the decay and velocity laws.
    Flow {
        #[command(flatten)]
        run: RunArgs,
        /// Re-check an existing trace CSV instead of running the flow.
        #[arg(long, conflicts_with_all = ["operator", "config"])]
        replay: Option<PathBuf>,
    },
    /// Continue a -> 0 with warm starts, write the report and stage traces.
    Solve(RunArgs),
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Gallery => {
            commands::gallery();
            Ok(true)
        }
        Command::Verify(args) => commands::verify(&args.resolve()?),
        Command::Flow { run, replay: Some(path) } => commands::replay(&path, run.ode_tol.unwrap_or(1e-8)),
        Command::Flow { run, replay: None } => commands::flow(&run.resolve()?),
        Command::Solve(args) => commands::solve(&args.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ssogd",
    version,
    about = "Online LQ tracking experiments with SS-OGD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Riccati equation, pick a step size and check stability conditions.
    Synthesize(RunArgs),
    /// Roll out one or more controllers and write traces and summaries.
    Simulate(RunArgs),
    /// Worst-case regret over seeded random references for several horizons.
    BatchRegret(BatchArgs),
    /// List built-in scenarios.
    Scenarios,
}

#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "scenario")]
    pub config: Option<PathBuf>,
    /// Built-in scenario name (see `ssogd scenarios`).
    #[arg(long)]
    pub scenario: Option<String>,
    /// Controller id, or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub controller: Vec<String>,
    /// Step size, a positive number or `auto`.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Clone, Debug)]
pub struct BatchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated horizons.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Vec<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // Usage errors share the parse-failure code; help and version succeed.
            return if err.use_stderr() {
                ExitCode::from(commands::EXIT_IO)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Synthesize(args) => commands::synthesize(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::BatchRegret(args) => commands::batch_regret(&args),
        Command::Scenarios => commands::scenarios(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}

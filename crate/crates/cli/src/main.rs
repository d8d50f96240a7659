//! `qesn`: simulate, decompose, tune and forecast with the ensemble
//! quadratic echo state network.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use qesn_cli::commands::{self, Ctx};
use qesn_cli::config::RunConfig;
use qesn_cli::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "qesn",
    version,
    about = "Ensemble quadratic echo state network forecasting pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the 40-variable Lorenz-96 benchmark system
    Simulate(RunArgs),
    /// Compute anomalies and an EOF basis for a gridded field
    Eof(RunArgs),
    /// Grid-search hyper-parameters on a holdout validation window
    Tune(RunArgs),
    /// Fit the ensemble, forecast the holdout window and score it
    Forecast(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: &RunArgs, cmd: fn(&Ctx) -> CliResult<()>) -> CliResult<()> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(output) = &args.output {
        config.output = output.clone();
    }
    let threads = args.threads.or(config.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }

    let out_dir = config.output.clone();
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::config(format!("creating {}: {e}", out_dir.display())))?;
    cmd(&Ctx { config, out_dir })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match &cli.command {
        Command::Simulate(args) => run(args, commands::cmd_simulate),
        Command::Eof(args) => run(args, commands::cmd_eof),
        Command::Tune(args) => run(args, commands::cmd_tune),
        Command::Forecast(args) => run(args, commands::cmd_forecast),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qesn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

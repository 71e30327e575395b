use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cutbiot_cli::{cmd_convergence, cmd_solve, cmd_sweep, CliError, CommonOpts, RunConfig};

#[derive(Parser)]
#[command(name = "cutbiot", version, about = "Cut finite element solver for the three-field Biot system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble and solve one manufactured-solution problem.
    Solve(Opts),
    /// Run the refinement ladder for every (lambda, K) combination.
    Convergence(Opts),
    /// Solve over a family of background-mesh translations.
    Sweep(Opts),
}

#[derive(Args)]
struct Opts {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Disable the ghost penalty (the sweep then runs only the unstabilized arm).
    #[arg(long)]
    no_stab: bool,
    /// Allow meshes finer than N=128.
    #[arg(long)]
    allow_fine: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Solve(opts) | Command::Convergence(opts) | Command::Sweep(opts)) = &cli.command;
    let cfg = RunConfig::load(&opts.config)?;
    let common = CommonOpts {
        out: opts.out.clone(),
        workers: opts.workers,
        no_stab: opts.no_stab,
        allow_fine: opts.allow_fine,
    };
    match cli.command {
        Command::Solve(_) => cmd_solve(&cfg, &common).map(drop),
        Command::Convergence(_) => cmd_convergence(&cfg, &common).map(drop),
        Command::Sweep(_) => cmd_sweep(&cfg, &common).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

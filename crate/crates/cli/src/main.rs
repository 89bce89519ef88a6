use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use critnls_cli::commands::{self, Context, THREADS_ENV};
use critnls_cli::{CliError, Status};

/// Radial laboratory for the focusing energy-critical NLS with Yukawa
/// potentials.
#[derive(Debug, Parser)]
#[command(name = "critnls", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Reserved. Runs are deterministic; the value is only recorded.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the report on standard output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify the potential: Kato and L^(N/2) norms, admissibility margin.
    PotentialInfo(Common),
    /// Find the ground state and store it in the cache.
    GroundState(Common),
    /// Evolve the initial data and write the trajectory.
    Evolve(Common),
    /// Classify the initial data as scattering, blow-up or undecided.
    Classify(Common),
    /// Classify every amplitude (and coupling) of the [sweep] section.
    Sweep(Common),
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let threads = commands::threads_from_env(std::env::var(THREADS_ENV).ok().as_deref())?;
    let (common, f): (Common, fn(&Context) -> Result<Status, CliError>) = match cli.command {
        Command::PotentialInfo(c) => (c, commands::potential_info),
        Command::GroundState(c) => (c, commands::ground_state_cmd),
        Command::Evolve(c) => (c, commands::evolve_cmd),
        Command::Classify(c) => (c, commands::classify_cmd),
        Command::Sweep(c) => (c, commands::sweep_cmd),
    };
    let ctx = Context::new(common.config, common.out, common.seed, common.quiet, threads)?;
    f(&ctx)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("critnls: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

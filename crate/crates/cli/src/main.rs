use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use levyfield_cli::{run_file, Overrides, Subcommand};

/// Simulate, price and validate Levy-field forward-rate models.
///
/// Every flag can also be set through an environment variable with the
/// `LEVYFIELD_` prefix, e.g. `LEVYFIELD_SEED=7`.
#[derive(Parser)]
#[command(name = "levyfield", version)]
enum Cli {
    /// Write the jump atoms of every simulated path.
    Simulate(Common),
    /// Tabulate the martingale drift surface on the configured grid.
    DriftTable(Common),
    /// Write forward, spot and bond prices per path.
    Price(Common),
    /// Run the configured Monte Carlo and exact checks.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, env = "LEVYFIELD_CONFIG")]
    config: PathBuf,
    /// Output directory (overrides `run.out`).
    #[arg(long, env = "LEVYFIELD_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "LEVYFIELD_SEED")]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "LEVYFIELD_WORKERS")]
    workers: Option<usize>,
    #[arg(long, env = "LEVYFIELD_N_PATHS")]
    n_paths: Option<usize>,
    /// Significant digits in CSV output (1 to 17).
    #[arg(long, env = "LEVYFIELD_PRECISION")]
    precision: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (command, args) = match Cli::parse() {
        Cli::Simulate(a) => (Subcommand::Simulate, a),
        Cli::DriftTable(a) => (Subcommand::DriftTable, a),
        Cli::Price(a) => (Subcommand::Price, a),
        Cli::Validate(a) => (Subcommand::Validate, a),
    };
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
        workers: args.workers,
        n_paths: args.n_paths,
        precision: args.precision,
    };
    match run_file(command, &args.config, &overrides) {
        Ok(outcome) => {
            for line in &outcome.reports {
                println!("{line}");
            }
            println!("wrote {}", outcome.artifact.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

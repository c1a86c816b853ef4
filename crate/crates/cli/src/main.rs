//! `magspec`: config-driven runs of the capacity, spectral and criteria computations.
//!
//! Exit codes: 0 all checks pass, 1 check failures, 2 configuration errors, 3 solver non-convergence.

mod commands;
mod config;
mod error;
mod expr;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failures, Meta};
use error::CliError;
use output::{Outputs, RunRecord};

#[derive(Parser)]
#[command(name = "magspec", version, about = "Capacity, spectral bottoms and discreteness criteria on lattice cubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wiener capacity of a cell set.
    Capacity(Args),
    /// Dirichlet and Neumann spectral bottoms and the local magnetic energy.
    Eigen(Args),
    /// Molchanov functional by greedy search or exhaustive enumeration.
    Molchanov(Args),
    /// Tiling scans: discreteness, fixed fraction, necessary, positivity, domain geometry.
    Scan(Args),
    /// Inequality testbench: calibrate constants into a ledger or validate against it.
    Verify(Args),
    /// Half-space construction with a growing profile.
    #[command(name = "demo-precision")]
    DemoPrecision(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML configuration file.
    config: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "magspec-out")]
    out: PathBuf,
}

type Runner = fn(&Path, &mut Outputs, &mut Meta) -> Result<Failures, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, run): (&str, Args, Runner) = match cli.command {
        Command::Capacity(a) => ("capacity", a, commands::capacity),
        Command::Eigen(a) => ("eigen", a, commands::eigen),
        Command::Molchanov(a) => ("molchanov", a, commands::molchanov),
        Command::Scan(a) => ("scan", a, commands::scan),
        Command::Verify(a) => ("verify", a, commands::verify),
        Command::DemoPrecision(a) => ("demo-precision", a, commands::demo_precision),
    };
    let mut out = match Outputs::create(&args.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("magspec {name}: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let mut meta = Meta::default();
    let result = run(&args.config, &mut out, &mut meta);
    let (code, message) = match &result {
        Ok(f) if f.is_empty() => (0, None),
        Ok(f) => {
            let e = CliError::Check(f.join("; "));
            eprintln!("magspec {name}: {e}");
            (e.exit_code(), Some(e.to_string()))
        }
        Err(e) => {
            eprintln!("magspec {name}: {e}");
            (e.exit_code(), Some(e.to_string()))
        }
    };
    let record = RunRecord {
        command: name.to_string(),
        config: args.config.display().to_string(),
        config_sha256: meta.config_sha256,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        ledger_version: meta.ledger_version,
        threads: meta.threads,
        started_unix: 0,
        wall_time_s: 0.0,
        exit_code: code,
        message,
        outputs: Vec::new(),
    };
    if let Err(e) = out.finish(record) {
        eprintln!("magspec {name}: {e}");
        return ExitCode::from(e.exit_code());
    }
    ExitCode::from(code)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod failure;

/// Solve and check variational inequalities in (R^n, ||.||_p).
#[derive(Debug, Parser)]
#[command(name = "vi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run Picard iteration and write trace.csv and summary.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Step size; overrides solver.lambda.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Estimate the Lipschitz constant and test the certificate on sampled pairs.
    CheckMap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "VI_SEED")]
        seed: Option<u64>,
        /// Number of sampled pairs.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run a seeded property sweep.
    Verify {
        suite: Suite,
        #[arg(long, env = "VI_SEED")]
        seed: Option<u64>,
        /// Samples per (p, n) combination.
        #[arg(long)]
        count: Option<usize>,
        /// Restrict the sweep to one exponent.
        #[arg(long)]
        p: Option<f64>,
        /// Restrict the sweep to one dimension.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Brute-force the problem on a grid and compare with the solver.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Points per axis, e.g. `41,41`.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Suite {
    /// Norm and pairing identities of the duality map.
    Duality,
    /// Sunny, nonexpansive and characterization checks of the retractions.
    Retraction,
    /// `<Jx - Jy, x - y> + 4 ||x|| ||y|| >= <J(x - y), x - y>`.
    Pairing,
    /// The classical projection factor at `r = gamma = s = 1`, `mu = 1/10`.
    Remark,
}

const DEFAULT_SEED: u64 = 0;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            config,
            out,
            lambda,
            tol,
            max_iter,
        } => commands::solve(&config, &out, lambda, tol, max_iter),
        Command::CheckMap {
            config,
            seed,
            samples,
        } => commands::check_map(&config, seed, samples),
        Command::Verify {
            suite,
            seed,
            count,
            p,
            n,
        } => commands::verify(suite, seed.unwrap_or(DEFAULT_SEED), count, p, n),
        Command::Oracle { config, grid } => commands::oracle(&config, grid),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.kind.code())
        }
    }
}

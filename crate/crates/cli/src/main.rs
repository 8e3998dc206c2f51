use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polyreg_cli::config::{ExperimentConfig, Overrides};
use polyreg_cli::{run, Command};

#[derive(Parser)]
#[command(name = "polyreg", version, about = "Regularity of laws of polynomials in Gaussian variables")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Exact variance by two routes and a Monte Carlo estimate.
    Variance(Common),
    /// Moduli of continuity, sandwich, envelope and degree checks.
    Modulus(Common),
    /// Empirical characteristic function against its decay envelope.
    Cf(Common),
    /// Total variation and Kantorovich-Rubinstein distances of a perturbation family.
    Distance(Common),
    /// Every check over a random polynomial family.
    VerifyAll(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of Gaussian variables of the random family.
    #[arg(long)]
    n: Option<usize>,
    /// Power cap of each variable.
    #[arg(long)]
    m: Option<usize>,
    /// Total degree.
    #[arg(long)]
    d: Option<usize>,
    /// Number of random polynomials.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Histogram cells.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Also render SVG charts.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Sub::Variance(a) => (Command::Variance, a),
        Sub::Modulus(a) => (Command::Modulus, a),
        Sub::Cf(a) => (Command::Cf, a),
        Sub::Distance(a) => (Command::Distance, a),
        Sub::VerifyAll(a) => (Command::VerifyAll, a),
    };
    let result = args
        .config
        .as_deref()
        .map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
        .and_then(|mut cfg| {
            cfg.apply(&Overrides {
                seed: args.seed,
                out: args.out,
                n: args.n,
                m: args.m,
                d: args.d,
                samples: args.samples,
                grid: args.grid,
                workers: args.workers,
                count: args.count,
                svg: args.svg,
            });
            run(cmd, &cfg)
        });
    match result {
        Ok(code) => {
            if code != 0 {
                eprintln!("polyreg {}: checks failed (exit {code})", cmd.name());
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("polyreg {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Batch harness around the `polyreg` pipeline: polynomial, samples,
//! density, functionals, reports.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_RESOLUTION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] polyreg::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// A check ran to completion and failed.
    #[error("check `{0}` failed")]
    Verdict(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verdict(_) => EXIT_VERDICT,
            CliError::Core(e) if is_resolution(e) => EXIT_RESOLUTION,
            _ => EXIT_INPUT,
        }
    }
}

/// Errors that mean the data cannot resolve the requested scale.
pub fn is_resolution(e: &polyreg::Error) -> bool {
    matches!(
        e,
        polyreg::Error::EpsilonBelowResolution { .. } | polyreg::Error::InsufficientDecay
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Variance,
    Modulus,
    Cf,
    Distance,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Variance => "variance",
            Command::Modulus => "modulus",
            Command::Cf => "cf",
            Command::Distance => "distance",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Runs `cmd` on a pool of `cfg.workers` threads, writes the summary and
/// manifest, and returns the process exit code.
pub fn run(cmd: Command, cfg: &config::ExperimentConfig) -> Result<i32, CliError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Input(format!("cannot build thread pool: {e}")))?;
    pool.install(|| {
        let mut out = output::Outputs::create(&cfg.out)?;
        let code = match cmd {
            Command::VerifyAll => commands::cmd_verify_all(cfg, &mut out)?,
            _ => {
                let failing = match cmd {
                    Command::Variance => commands::cmd_variance(cfg, &mut out)?,
                    Command::Modulus => commands::cmd_modulus(cfg, &mut out)?,
                    Command::Cf => commands::cmd_cf(cfg, &mut out)?,
                    Command::Distance => commands::cmd_distance(cfg, &mut out)?,
                    Command::VerifyAll => unreachable!(),
                };
                out.write_json(
                    "summary.json",
                    &serde_json::json!({
                        "command": cmd.name(),
                        "config_hash": cfg.hash(),
                        "seed": cfg.seed,
                        "passed": failing.is_empty(),
                        "failing": failing,
                    }),
                )?;
                if failing.is_empty() {
                    EXIT_PASS
                } else {
                    EXIT_VERDICT
                }
            }
        };
        out.finish(cmd.name(), cfg)?;
        Ok(code)
    })
}

//! `homogmart`: simulate sphere processes, run the martingale criterion, verify invariants.

mod commands;
mod error;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homogmart::homog::QuadraticReading;

use crate::error::{CliError, ExitStatus};
use crate::run::{Overrides, RunConfig, RunFile};
use crate::verify::VerifyOptions;

const THREADS_ENV: &str = "HOMOGMART_THREADS";

#[derive(Parser)]
#[command(name = "homogmart", version, about = "Martingales on reductive homogeneous spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an ensemble of sphere paths as CSV plus a manifest.
    Simulate(RunArgs),
    /// Lift an ensemble, run the martingale criterion and the sphere oracles.
    Criterion(RunArgs),
    /// Run the invariant suites at fixed seeds.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Reading {
    Covariation,
    Literal,
}

impl From<Reading> for QuadraticReading {
    fn from(r: Reading) -> Self {
        match r {
            Reading::Covariation => QuadraticReading::Covariation,
            Reading::Literal => QuadraticReading::Literal,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Space preset, e.g. `sphere:2`.
    #[arg(long)]
    space: Option<String>,
    /// Space specification file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Process generator name.
    #[arg(long)]
    process: Option<String>,
    /// Ensemble size.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon.
    #[arg(long = "T", visible_alias = "horizon")]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to HOMOGMART_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Ensemble CSV to analyze instead of generating paths.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated checkpoint times.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<f64>>,
    /// How the quadratic term of the criterion is read.
    #[arg(long, value_enum)]
    reading: Option<Reading>,
    /// Largest admissible |z|.
    #[arg(long)]
    z_max: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only checks whose suite or `suite/name` id matches.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Flip the sign of the Itô correction, to confirm the suite catches it.
    #[arg(long, hide = true)]
    inject_ito_sign_flip: bool,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let file = self.config.as_deref().map(RunFile::load).transpose()?;
        let overrides = Overrides {
            space: self.space,
            spec: self.spec,
            process: self.process,
            paths: self.paths,
            dt: self.dt,
            horizon: self.horizon,
            seed: self.seed,
            threads: self.threads,
            input: self.input,
            checkpoints: self.checkpoints,
            reading: self.reading.map(Into::into),
            z_max: self.z_max,
            out: self.out,
        };
        RunConfig::build(file, overrides)
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = thread_count(threads)? {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn dispatch(cli: Cli) -> Result<(ExitStatus, String), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.into_config()?;
            in_pool(cfg.threads, || commands::simulate(&cfg))?
        }
        Command::Criterion(args) => {
            let cfg = args.into_config()?;
            in_pool(cfg.threads, || commands::criterion(&cfg))?
        }
        Command::Verify(args) => {
            let mut options = VerifyOptions::default();
            if args.inject_ito_sign_flip {
                options.ito_correction = -options.ito_correction;
            }
            let filter = args.filter;
            let (ok, table) = in_pool(args.threads, || verify::run_suites(filter.as_deref(), &options))?;
            Ok((if ok { ExitStatus::Pass } else { ExitStatus::Fail }, table))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok((status, text)) => {
            print!("{text}");
            ExitCode::from(status as u8)
        }
        Err(e) => {
            eprintln!("homogmart: {e}");
            ExitCode::from(e.status() as u8)
        }
    }
}

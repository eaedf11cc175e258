//! `qbt`: sweeps, reference curves, discrete-bath reports and the
//! verification suite.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qbt_core::damping::PhysicalConstants;
use qbt_core::discrete_bath::seeded_random_bath;
use qbt_core::verify::{Level, References};

use config::{Format, SweepConfig};
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "qbt", version, about = "Thermodynamics of a damped quantum oscillator")]
struct Cli {
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for point evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// K/(ħw0) for the four reference Drude curves on 200 log-spaced T in [0.01, 50].
    Figure1,

    /// Evaluate requested fields over a temperature grid.
    Sweep {
        /// Sweep configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Use the classical (ħ -> 0) formulas.
        #[arg(long)]
        classical: bool,
        /// Relative tolerance for series and quadrature.
        #[arg(long)]
        tol: Option<f64>,
        /// Output format (default: from the --out extension, else CSV).
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },

    /// Normal modes and thermodynamics of a finite bath.
    Discrete {
        /// Bath description (JSON). A random bath is drawn if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for the random bath.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of bath oscillators in the random bath.
        #[arg(long, default_value_t = 4)]
        modes: usize,
        /// Comma-separated temperatures.
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,1,10")]
        temps: Vec<f64>,
    },

    /// Run the verification suite; exits non-zero if any check fails.
    Verify {
        #[arg(value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Override a reference value (name=value), for exercising the failure path.
        #[arg(long, hide = true)]
        inject: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

fn format_for(arg: Option<FormatArg>, cfg: Option<Format>, out: Option<&Path>) -> Format {
    match (arg, cfg) {
        (Some(FormatArg::Csv), _) => Format::Csv,
        (Some(FormatArg::Json), _) => Format::Json,
        (None, Some(f)) => f,
        (None, None) => match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        },
    }
}

fn parse_injection(refs: &mut References, spec: &str) -> Result<()> {
    let (name, value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(format!("--inject expects name=value, got `{spec}`")))?;
    let value: f64 = value
        .parse()
        .map_err(|_| CliError::Invalid(format!("--inject {name}: `{value}` is not a number")))?;
    refs.set(name, value)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Figure1 => output::emit(out, &commands::figure1(&References::default())?)?,
        Command::Sweep {
            config,
            classical,
            tol,
            format,
        } => {
            let mut cfg = SweepConfig::load(&config)?;
            cfg.classical |= classical;
            if let Some(t) = tol {
                cfg.tolerances.quad_tol = t;
                cfg.tolerances.series.rel_tol = t;
            }
            cfg.validate()?;
            let fmt = format_for(format, cfg.format, out);
            output::emit(out, &commands::sweep(&cfg, fmt)?)?;
        }
        Command::Discrete {
            config,
            seed,
            modes,
            temps,
        } => {
            let bath = match config {
                Some(p) => commands::load_bath(&p)?,
                None => seeded_random_bath(seed, modes, 1.0, 1.0)?,
            };
            let report = commands::discrete(bath, &temps, &PhysicalConstants::default())?;
            output::emit(out, &output::json_bytes(&report)?)?;
        }
        Command::Verify { level, inject } => {
            let mut refs = References::default();
            for spec in &inject {
                parse_injection(&mut refs, spec)?;
            }
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let (results, report) = commands::verify(level, &refs);
            output::emit(out, report.as_bytes())?;
            return Ok(results.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QBT_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

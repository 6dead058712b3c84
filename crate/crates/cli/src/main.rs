//! `lightcone-rdm`: batch front end for the lattice causality experiments.
//!
//! Exit codes: 0 pass, 2 a scientific check failed, 3 bad input or a
//! violated precondition.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lightcone_core::harness::RunManifest;

use crate::output::{Outcome, Sink};

const EXIT_FAIL: u8 = 2;
const EXIT_INPUT: u8 = 3;
const THREADS_VAR: &str = "LIGHTCONE_RDM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lightcone-rdm", version, about = "Reduced-state causality experiments on a lattice scalar field")]
struct Cli {
    /// TOML configuration (JSON if the name ends in .json); built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for the report, tables and run manifest.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Format of tabular output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel dumps, identity residuals and the commutator light-cone profile.
    Kernels,
    /// Kick a region, evolve, and compare reduced descriptors outside the cone.
    Causality,
    /// Out-of-cone deviation over a grid of times and margins.
    Sweep,
    /// Local unitary relating two amplitude matrices with equal reduced states.
    FactorUnitary {
        /// JSON (or .toml) file with `f1`, `f2` and optional tolerances; defaults to --config.
        input: Option<PathBuf>,
    },
    /// Vacuum witness of a two-branch cat state outside the kicked region.
    CatWitness,
    /// Cross-checks against exact diagonalization in a truncated Fock space.
    Oracle,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kernels => "kernels",
            Command::Causality => "causality",
            Command::Sweep => "sweep",
            Command::FactorUnitary { .. } => "factor-unitary",
            Command::CatWitness => "cat-witness",
            Command::Oracle => "oracle",
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().with_context(|| format!("{THREADS_VAR}={raw:?} is not a thread count"))?;
    if n == 0 {
        bail!("{THREADS_VAR} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run_with<T: serde::Serialize>(
    cli: &Cli,
    config: &T,
    seed: u64,
    f: impl FnOnce(&T) -> Result<Outcome>,
) -> Result<bool> {
    let sink = Sink::new(cli.out.clone(), cli.format)?;
    let manifest = RunManifest::start(config, seed);
    let outcome = f(config)?;
    sink.emit(cli.command.name(), manifest, &outcome)?;
    Ok(outcome.pass)
}

fn run(cli: &Cli) -> Result<bool> {
    let path = cli.config.as_deref();
    match &cli.command {
        Command::Kernels => {
            let cfg: config::KernelsConfig = config::load(path)?;
            run_with(cli, &cfg, cli.seed.unwrap_or(0), commands::kernels)
        }
        Command::Causality => {
            let cfg: config::CausalityConfig = config::load(path)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            run_with(cli, &cfg, seed, |c| commands::causality(c, Some(seed)))
        }
        Command::Sweep => {
            let cfg: config::SweepConfig = config::load(path)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            run_with(cli, &cfg, seed, |c| commands::sweep(c, Some(seed)))
        }
        Command::FactorUnitary { input } => {
            let Some(input) = input.as_deref().or(path) else {
                bail!("factor-unitary needs an input file");
            };
            let data = config::load_factor_input(Path::new(input))?;
            run_with(cli, &data, cli.seed.unwrap_or(0), commands::factor_unitary)
        }
        Command::CatWitness => {
            let cfg: config::CatConfig = config::load(path)?;
            run_with(cli, &cfg, cli.seed.unwrap_or(0), commands::cat_witness)
        }
        Command::Oracle => {
            let cfg: config::OracleConfig = config::load(path)?;
            run_with(cli, &cfg, cli.seed.unwrap_or(0), commands::oracle)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<lightcone_core::Error>() {
        Some(e) if !e.is_input_error() => EXIT_FAIL,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_INPUT);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: check failed", cli.command.name());
            ExitCode::from(EXIT_FAIL)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Command-line front end tying the toolkit modules into reproducible
//! pipelines. Every command reads one TOML config (defaults when omitted)
//! and writes self-describing CSV/JSON files into the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 compute error,
//! 4 missing report inputs.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::CliError;
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cherenkov2d",
    about = "Surface-wave Cherenkov radiation toolkit: dispersion, loss spectra, EELS forward models, coupling fits, and joint electron-photon states",
    version
)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Comma-separated seed list overriding fit.seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reflection map, mode ridge, and Cherenkov phase matching.
    Dispersion,
    /// Energy-loss spectra, coupling strengths, and the SP reference curve.
    Spectrum,
    /// Poisson-convolution EELS forward model.
    Eels,
    /// Fit (lambda, s*p, x0) to a measured or synthetic spectrum.
    Fit,
    /// Joint electron-photon states and photon density matrices.
    Quantum,
    /// Assemble figure data tables and an acceptance summary.
    Report,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        // Ignore the error when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seeds) = &cli.seed_list {
        if seeds.is_empty() {
            return Err(CliError::Config("--seed-list must not be empty".into()));
        }
        cfg.fit.seeds = seeds.clone();
    }
    match cli.command {
        Command::Dispersion => commands::cmd_dispersion(&cfg, &cli.out),
        Command::Spectrum => commands::cmd_spectrum(&cfg, &cli.out),
        Command::Eels => commands::cmd_eels(&cfg, &cli.out),
        Command::Fit => commands::cmd_fit(&cfg, &cli.out),
        Command::Quantum => commands::cmd_quantum(&cfg, &cli.out),
        Command::Report => commands::cmd_report(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `zigzag`: band/gap/flat-band computations for the magnetic Schrödinger
//! operator on a zigzag nanotube graph.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error.

mod commands;
mod config;
mod fmt;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_channels_flag, parse_sweep_flag, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "zigzag",
    version,
    about = "Spectra of the magnetic Schrödinger operator on zigzag nanotube graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override file fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Upper end of the λ window.
    #[arg(long = "lambda-max")]
    lambda_max: Option<f64>,
    /// Field sweep grid MIN:MAX:STEPS.
    #[arg(long)]
    b: Option<String>,
    /// Comma-separated channel list, e.g. 1,2,3.
    #[arg(long)]
    channels: Option<String>,
    /// Seed for the randomized verification checks.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate F and the per-channel Lyapunov data over a λ grid.
    Discriminant(Common),
    /// Bands, gaps and flat points at one field value (CSV + JSON report).
    Spectrum(Common),
    /// Spectrum reports over a field grid, with band-edge traces.
    Sweep(Common),
    /// Export a compactly supported eigenfunction sampled on its support.
    Eigenfunction(Common),
    /// Run the acceptance suite and write a JSON report.
    Verify(Common),
}

fn resolve(common: &Common) -> anyhow::Result<RunConfig> {
    let overrides = Overrides {
        out: common.out.clone(),
        lambda_max: common.lambda_max,
        b_sweep: common.b.as_deref().map(parse_sweep_flag).transpose()?,
        channels: common.channels.as_deref().map(parse_channels_flag).transpose()?,
        seed: common.seed,
    };
    RunConfig::load(common.config.as_deref(), overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&RunConfig) -> anyhow::Result<bool>) = match &cli.command {
        Command::Discriminant(c) => (c, |cfg| commands::cmd_discriminant(cfg).map(|_| true)),
        Command::Spectrum(c) => (c, |cfg| commands::cmd_spectrum(cfg).map(|_| true)),
        Command::Sweep(c) => (c, |cfg| commands::cmd_sweep(cfg).map(|_| true)),
        Command::Eigenfunction(c) => (c, |cfg| commands::cmd_eigenfunction(cfg).map(|_| true)),
        Command::Verify(c) => (c, commands::cmd_verify),
    };
    let cfg = match resolve(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

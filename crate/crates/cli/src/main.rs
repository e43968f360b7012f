mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Run;
use config::RunConfig;
use error::CliError;

/// Optimal transport of a particle bound in a shallow Morse trap.
#[derive(Parser)]
#[command(name = "qtransport", version)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set optimize.lambda=-0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write an SVG plot for each CSV.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Trap parameters and the continuum weight table a_kappa.
    Morse,
    /// Memory kernel samples.
    Kernel,
    /// Leakage spectrum with a Fourier-consistency report.
    Spectrum,
    /// Damped-oscillator fit of the kernel.
    Fit,
    /// Optimal trajectory (and lambda sweep if configured).
    Optimize,
    /// Survival probability along the trajectory.
    Survival,
    /// Adiabaticity map along the trajectory.
    Adiabaticity,
    /// Every stage in order, plus manifest.json.
    Pipeline,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(dir) = &cli.out {
        config.output.directory = dir.clone();
    }
    if cli.svg {
        config.output.svg = true;
    }
    let mut run = Run::new(config)?;
    match cli.command {
        Command::Pipeline => return commands::pipeline(&mut run),
        Command::Morse => {
            let m = run.build_model()?;
            run.emit_morse(&m)?;
        }
        Command::Kernel => {
            let m = run.build_model()?;
            let s = run.build_samples(&m)?;
            run.emit_kernel(&s)?;
        }
        Command::Spectrum => {
            let m = run.build_model()?;
            let s = run.build_samples(&m)?;
            run.emit_spectrum(&m, &s)?;
        }
        Command::Fit => {
            let m = run.build_model()?;
            let s = run.build_samples(&m)?;
            let f = run.build_fit(&s)?;
            run.emit_fit(&s, &f)?;
        }
        Command::Optimize | Command::Survival | Command::Adiabaticity => {
            let m = run.build_model()?;
            let s = run.build_samples(&m)?;
            let f = run.build_fit(&s)?;
            let t = run.build_trajectory(&f)?;
            match cli.command {
                Command::Optimize => run.emit_trajectory(&f, &t)?,
                Command::Survival => run.emit_survival(&m, &t)?,
                _ => run.emit_adiabaticity(&m, &t)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

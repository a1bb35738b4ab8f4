//! `landau`: relativistic Landau levels in power-law fields, the resulting
//! equation of state, magnetized white dwarfs and quantum speed limits.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure. Failures
//! print a JSON error record on stderr.

mod commands;
mod config;
mod error;
mod output;
mod reference;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use landau_core::PhysicalConstants;

use crate::commands::Ctx;
use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Units: fields in G (power-law normalization B0 in G pm^-n), radii in pm
/// for the quantum problem and km for stars, everything else cgs.
#[derive(Debug, Parser)]
#[command(name = "landau", version)]
struct Cli {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; without it results go to stdout
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Use the Schwinger critical field 4.414e13 G instead of the default
    #[arg(long, global = true)]
    schwinger: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues alpha (dimensionless, E^2 = m_e^2 c^4 (1 + x_z^2 + alpha)) of one (m, spin) ladder
    Spectrum(commands::SpectrumArgs),
    /// Dimensionless effective potential V_eff against rho (pm)
    Potential(commands::PotentialArgs),
    /// Dispersion-relation constants from eigensolves (B0 in units of 1e15 G pm^-n)
    Fit(commands::FitArgs),
    /// Equation of state table: n_e (cm^-3), rho (g cm^-3), energy density and P (erg cm^-3)
    Eos(commands::EosArgs),
    /// Structure of one star: r (km), M (g), P (erg cm^-3), rho (g cm^-3), B (G)
    Star(commands::StarArgs),
    /// Mass (Msun) and radius (km) against central density (g cm^-3)
    MrCurve(commands::CurveArgs),
    /// Quantum speed v/c of the spin-up nu = 0 -> 1 transition against n
    Qspeed(commands::QspeedArgs),
    /// Regenerate a published table or figure with a pass/fail report
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut run = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.schwinger {
        run.constants = PhysicalConstants::schwinger();
    }
    run.constants.validate()?;
    run.solver.validate()?;
    let ctx = Ctx {
        consts: run.constants,
        solver: run.solver,
        format: cli.format.unwrap_or(run.format),
        out: cli.out.clone().or_else(|| run.output_dir.clone()),
        run,
    };
    let artifacts = match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a, &ctx)?,
        Command::Potential(a) => commands::potential(a, &ctx)?,
        Command::Fit(a) => commands::fit(a, &ctx)?,
        Command::Eos(a) => commands::eos(a, &ctx)?,
        Command::Star(a) => commands::star(a, &ctx)?,
        Command::MrCurve(a) => commands::mr_curve(a, &ctx)?,
        Command::Qspeed(a) => commands::qspeed(a, &ctx)?,
        Command::Reproduce { target } => {
            let (artifacts, report) = reproduce::run(*target, &ctx)?;
            if ctx.out.is_some() {
                for c in &report.checks {
                    println!("{} {}: {:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
                }
            }
            artifacts
        }
    };
    output::emit(&artifacts, ctx.format, ctx.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = e.record();
            eprintln!("{}", serde_json::to_string(&record).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(record.exit_code)
        }
    }
}

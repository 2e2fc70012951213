//! `mac3`: reproduces the smoothing, two-grid LFA and measured multigrid
//! experiments for coarsening by three on the MAC Stokes discretization.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure
//! (divergence, eigensolver), 3 self-test mismatch.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Command, ExperimentConfig, Format, RawConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<mac3_core::Error> for CliError {
    fn from(e: mac3_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

/// Coarsening-by-three multigrid and LFA experiments for the MAC Stokes system.
///
/// Settings may come from a `key = value` file (`--config`); flags override it.
/// Lists (`--scheme`, `--nu`) are comma separated; transfer pairs are
/// separated by `;` or spaces, or `all`.
#[derive(Debug, Parser)]
#[command(name = "mac3", version)]
struct Cli {
    /// Command to run; may instead be set with `command = ...` in the config file.
    #[arg(value_enum)]
    command: Option<Command>,

    /// Relaxation schemes: qdr, qbsr (exact Schur solve), qibsr, quzawa.
    /// Default: qdr,qbsr,quzawa for LFA commands, qdr,quzawa,qibsr for runs.
    #[arg(long)]
    scheme: Option<String>,

    /// Restriction paired with P25 prolongation: r1, r9, r9b, p25t, all [default: p25t].
    #[arg(long)]
    transfer: Option<String>,

    /// Pre-smoothing steps, one table column each [default: 1,2,3,4].
    #[arg(long)]
    nu: Option<String>,

    /// Fine grid cells per direction, 3·3^k [default: 81].
    #[arg(long)]
    n: Option<String>,

    /// Boundary conditions for measured runs: dirichlet or periodic [default: dirichlet].
    #[arg(long)]
    bc: Option<String>,

    /// Outer damping ω. For quzawa alone it selects (α, σ) on the optimal family.
    #[arg(long)]
    omega: Option<String>,

    /// Velocity scaling α.
    #[arg(long)]
    alpha: Option<String>,

    /// Uzawa pressure weight σ.
    #[arg(long)]
    sigma: Option<String>,

    /// Inner Jacobi weight for qibsr.
    #[arg(long = "omega-j")]
    omega_j: Option<String>,

    /// Frequency sampling resolution for LFA [default: 81].
    #[arg(long)]
    resolution: Option<String>,

    /// Seed of the random initial guess [default: 1].
    #[arg(long)]
    seed: Option<String>,

    /// Output file [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format [default: csv].
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Config file with `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl Cli {
    fn raw(self) -> (Option<PathBuf>, RawConfig) {
        let raw = RawConfig {
            command: self.command.map(|c| c.name().to_string()),
            scheme: self.scheme,
            transfer: self.transfer,
            nu: self.nu,
            n: self.n,
            bc: self.bc,
            omega: self.omega,
            alpha: self.alpha,
            sigma: self.sigma,
            omega_j: self.omega_j,
            resolution: self.resolution,
            seed: self.seed,
            out: self.out.map(|p| p.display().to_string()),
            format: self.format.map(|f| format!("{f:?}").to_lowercase()),
        };
        (self.config, raw)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    let (path, flags) = cli.raw();
    let file = match path {
        Some(p) => RawConfig::load(&p)?,
        None => RawConfig::default(),
    };
    let cfg = ExperimentConfig::resolve(file.merge(flags))?;
    let report = commands::run(&cfg)?;
    output::emit(&cfg, &report)?;
    for m in &report.numerical_failures {
        eprintln!("numerical failure: {m}");
    }
    for m in &report.mismatches {
        eprintln!("mismatch: {m}");
    }
    Ok(if !report.mismatches.is_empty() {
        ExitCode::from(3)
    } else if !report.numerical_failures.is_empty() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mac3: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

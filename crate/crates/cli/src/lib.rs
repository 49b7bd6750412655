//! `usd`: validate ensembles, solve for optimal unambiguous measurements,
//! export feasible regions and simulate the resulting measurements.
//!
//! Exit codes: 0 success, 1 invalid input, 2 I/O failure, 3 unsupported
//! configuration.

pub mod commands;
pub mod error;
pub mod input;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{MethodArg, SolveOptions};
use crate::error::{CliError, CliResult, EXIT_OK};
use crate::report::{Format, Render};

#[derive(Debug, Parser)]
#[command(
    name = "usd",
    version,
    about = "Optimal unambiguous discrimination of pure states"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Both, env = "USD_FORMAT", global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Tolerance for state norms, prior sums and duality checks.
    #[arg(long, default_value_t = 1e-9, env = "USD_TOL")]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[command(flatten)]
    pub tol: TolArgs,
    /// Grid resolution of the brute-force oracle.
    #[arg(long, default_value_t = 201, env = "USD_GRID")]
    pub grid: usize,
    /// Boundary ascent steps after the LP vertex.
    #[arg(long, default_value_t = usd_core::lp::DEFAULT_REFINE_STEPS, env = "USD_REFINE_STEPS")]
    pub refine_steps: usize,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol.tol,
            grid: self.grid,
            refine_steps: self.refine_steps,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check normalisation, linear independence and priors.
    Validate {
        path: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Compute optimal detection probabilities.
    Solve {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::All, env = "USD_METHOD")]
        method: MethodArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Export boundary samples of the feasible region as CSV.
    Region {
        path: PathBuf,
        #[arg(long, default_value_t = 200, env = "USD_SAMPLES")]
        samples: usize,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Solve, then simulate the measurement.
    Simulate {
        path: PathBuf,
        #[arg(long, default_value_t = 1_000_000, env = "USD_TRIALS")]
        trials: u64,
        #[arg(long, default_value_t = 1, env = "USD_SEED")]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print the Gram and dual Gram matrices with their spectra.
    Gram {
        path: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
    },
}

/// Runs one command, writing its output to `out`; returns the exit code.
pub fn run(cli: &Cli, out: &mut impl Write) -> CliResult<i32> {
    let text = match &cli.command {
        Command::Validate { path, tol } => {
            let (report, code) = commands::cmd_validate(path, tol.tol)?;
            emit(out, &report.render(cli.format))?;
            return Ok(code);
        }
        Command::Solve {
            path,
            method,
            solver,
        } => commands::cmd_solve(path, *method, &solver.options())?.render(cli.format),
        Command::Region {
            path,
            samples,
            out: target,
            tol,
        } => {
            let csv = commands::cmd_region(path, *samples, tol.tol)?;
            match target {
                None => csv,
                Some(file) => {
                    std::fs::write(file, &csv).map_err(|source| CliError::Io {
                        path: file.clone(),
                        source,
                    })?;
                    format!("wrote {} boundary rows to {}\n", samples, file.display())
                }
            }
        }
        Command::Simulate {
            path,
            trials,
            seed,
            solver,
        } => commands::cmd_simulate(path, *trials, *seed, &solver.options())?.render(cli.format),
        Command::Gram { path, tol } => commands::cmd_gram(path, tol.tol)?.render(cli.format),
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn emit(out: &mut impl Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

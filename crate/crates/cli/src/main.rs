//! `nsbf`: coefficients, eigenvalues and initial value problems for
//! Sturm-Liouville equations from the command line.

mod commands;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EigsArgs, SolveArgs, EXIT_INPUT};
use config::{FileConfig, Overrides, ProblemConfig};

#[derive(Debug, Parser)]
#[command(name = "nsbf", version, about)]
struct Cli {
    /// Problem configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in problem: kamke or degenerate.
    #[arg(long, global = true)]
    builtin: Option<String>,
    /// Number of grid points (odd, at least 201).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Truncation: "auto" or an integer.
    #[arg(long = "N", global = true)]
    truncation: Option<String>,
    /// Coefficient cache file.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute coefficients, write the cache and print the residual report.
    Coeffs {
        /// Directory for the cache and report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues as CSV: k, omega, lambda, residual.
    Eigs {
        #[arg(long = "omega-max")]
        omega_max: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        /// Also search lambda in [-floor^2, 0).
        #[arg(long = "negative-floor")]
        negative_floor: Option<f64>,
        /// Exit with status 1 when the count looks inconsistent.
        #[arg(long)]
        strict: bool,
        /// Compare with eigenvalues from direct integration.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solution of an initial value problem on the grid as CSV.
    Solve {
        /// Spectral parameter, lambda = omega^2; accepts a+bi.
        #[arg(long, allow_hyphen_values = true)]
        omega: String,
        #[arg(long = "u-a", default_value = "1", allow_hyphen_values = true)]
        u_a: String,
        #[arg(long = "up-a", default_value = "0", allow_hyphen_values = true)]
        up_a: String,
        /// Add the difference from direct integration.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite on the built-in test problem.
    Selftest {
        /// Fewer eigenvalues.
        #[arg(long)]
        quick: bool,
    },
}

fn load_config(cli: &Cli) -> nsbf::Result<ProblemConfig> {
    let overrides = Overrides {
        builtin: cli.builtin.clone(),
        grid: cli.grid,
        truncation: cli.truncation.clone(),
        cache: cli.cache.clone(),
    };
    match &cli.config {
        Some(path) => {
            let base = path.parent().unwrap_or(Path::new("."));
            FileConfig::load(path)?.resolve(base, &overrides)
        }
        None if cli.builtin.is_some() => FileConfig::default().resolve(Path::new("."), &overrides),
        None => Err(nsbf::Error::InvalidInput(
            "give --config FILE or --builtin NAME".into(),
        )),
    }
}

fn sink(out: &Option<PathBuf>) -> nsbf::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: &Cli) -> nsbf::Result<i32> {
    match &cli.command {
        Command::Selftest { quick } => {
            let mut out = sink(&None)?;
            commands::selftest(*quick, cli.cache.as_deref(), out.as_mut())
        }
        Command::Coeffs { out } => {
            let config = load_config(cli)?;
            let mut w = sink(&None)?;
            commands::coeffs(&config, out.as_deref(), w.as_mut())
        }
        Command::Eigs {
            omega_max,
            count,
            negative_floor,
            strict,
            check,
            out,
        } => {
            let config = load_config(cli)?;
            let args = EigsArgs {
                omega_max: *omega_max,
                count: *count,
                negative_floor: *negative_floor,
                strict: *strict,
                check: *check,
            };
            let mut w = sink(out)?;
            let code = commands::eigs(&config, &args, w.as_mut())?;
            w.flush()?;
            Ok(code)
        }
        Command::Solve {
            omega,
            u_a,
            up_a,
            check,
            out,
        } => {
            let config = load_config(cli)?;
            let args = SolveArgs {
                omega: commands::parse_complex(omega)?,
                u_a: commands::parse_complex(u_a)?,
                up_a: commands::parse_complex(up_a)?,
                check: *check,
            };
            let mut w = sink(out)?;
            let code = commands::solve(&config, &args, w.as_mut())?;
            w.flush()?;
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}

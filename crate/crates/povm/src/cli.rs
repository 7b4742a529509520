//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Failure, Output, SimulateArgs};
use crate::error::{Category, CliError};
use crate::inputs::{self, EnsembleSpec};
use crate::manifest::{load_manifest, DualChoice};
use crate::output::write_atomic;
use crate::reproduce::{self, ReproduceOptions};

#[derive(Debug, Parser)]
#[command(name = "povm", version, about = "Optimal linear processing of POVM measurement data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check positivity and completeness of a POVM file.
    Validate {
        #[arg(long)]
        povm: PathBuf,
        /// Accept an incomplete POVM and only report its defect.
        #[arg(long)]
        permissive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canonical and optimal dual frames with their traces and residuals.
    Duals {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long, default_value = "uniform")]
        ensemble: EnsembleSpec,
        /// Emit only this dual.
        #[arg(long, value_enum)]
        dual: Option<DualChoice>,
        #[arg(long)]
        permissive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Σ, δ, Ψ and ε for each operator in a file.
    Estimate {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long)]
        operator: PathBuf,
        #[arg(long, default_value = "uniform")]
        ensemble: EnsembleSpec,
        /// Report coefficients for this dual only.
        #[arg(long, value_enum)]
        dual: Option<DualChoice>,
        #[arg(long)]
        permissive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded Monte Carlo of measurement records; flags override the manifest.
    Simulate {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        povm: Option<PathBuf>,
        #[arg(long)]
        operator: Option<PathBuf>,
        #[arg(long)]
        ensemble: Option<EnsembleSpec>,
        #[arg(long, value_enum)]
        dual: Option<DualChoice>,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        permissive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the five-outcome qubit example against its published values.
    ReproducePaper {
        /// Monte Carlo shots; 0 skips sampling.
        #[arg(long, default_value_t = reproduce::DEFAULT_SHOTS)]
        shots: usize,
        #[arg(long, default_value_t = reproduce::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV grid of ε(σ_z + xσ_x + yσ_y) over x, y ∈ [−range, range].
    NoiseGrid {
        /// Defaults to the built-in example with its fifth element conjugated.
        #[arg(long)]
        povm: Option<PathBuf>,
        #[arg(long, default_value = "uniform")]
        ensemble: EnsembleSpec,
        #[arg(long, default_value_t = 3.0)]
        range: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
        #[arg(long)]
        permissive: bool,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn missing(flag: &str) -> CliError {
    CliError::new(Category::Io, format!("simulate: --{flag} is required without a manifest"))
}

fn dispatch(cmd: Command) -> Result<(Output, Option<PathBuf>), Failure> {
    match cmd {
        Command::Validate { povm, permissive, out } => Ok((commands::validate(&povm, permissive)?, out)),
        Command::Duals {
            povm,
            ensemble,
            dual,
            permissive,
            out,
        } => Ok((commands::duals(&povm, &ensemble, dual, permissive)?, out)),
        Command::Estimate {
            povm,
            operator,
            ensemble,
            dual,
            permissive,
            out,
        } => Ok((commands::estimate(&povm, &operator, &ensemble, dual, permissive)?, out)),
        Command::Simulate {
            manifest,
            povm,
            operator,
            ensemble,
            dual,
            shots,
            seed,
            permissive,
            out,
        } => {
            let m = manifest.as_deref().map(load_manifest).transpose()?;
            let povm = povm.or_else(|| m.as_ref().map(|m| m.povm.clone())).ok_or_else(|| missing("povm"))?;
            let operator = operator
                .or_else(|| m.as_ref().map(|m| m.operator.clone()))
                .ok_or_else(|| missing("operator"))?;
            let ensemble = ensemble
                .or_else(|| m.as_ref().map(|m| m.ensemble.clone()))
                .unwrap_or(EnsembleSpec::Uniform);
            let dual = dual.or(m.as_ref().map(|m| m.dual)).unwrap_or_default();
            let shots = shots.or(m.as_ref().map(|m| m.shots)).ok_or_else(|| missing("shots"))?;
            let seed = seed.or(m.as_ref().map(|m| m.seed)).ok_or_else(|| missing("seed"))?;
            let permissive = permissive || m.as_ref().is_some_and(|m| m.permissive);
            let out = out.or_else(|| m.as_ref().and_then(|m| m.out.clone()));
            let args = SimulateArgs {
                povm: &povm,
                operator: &operator,
                ensemble: &ensemble,
                dual,
                shots,
                seed,
                permissive,
            };
            Ok((commands::simulate(&args)?, out))
        }
        Command::ReproducePaper { shots, seed, out } => {
            let (json, summary, success) = reproduce::run(ReproduceOptions { shots, seed })?;
            if !success {
                return Err(reproduce::failure(summary));
            }
            Ok((Output { json, summary }, out))
        }
        Command::NoiseGrid {
            povm,
            ensemble,
            range,
            points,
            permissive,
            out,
        } => {
            let p = match &povm {
                Some(path) => inputs::load_povm(path, inputs::mode(permissive))?,
                None => commands::povm_of(
                    &reproduce::conjugated(&reproduce::fixture_file(), 4),
                    inputs::mode(permissive),
                )?,
            };
            let ens = inputs::load_ensemble(&ensemble, p.povm.dim())?;
            let rows = commands::noise_grid(&p.povm, &ens, range, points)?;
            let csv = commands::grid_csv(&rows);
            let summary = commands::grid_summary(&rows, range, points);
            match out {
                Some(path) => Ok((Output { json: csv, summary }, Some(path))),
                None => Ok((Output { json: Vec::new(), summary: String::from_utf8(csv).expect("utf-8") }, None)),
            }
        }
    }
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { Category::Io.exit_code() } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok((output, out)) => {
            if let Some(path) = out {
                if let Err(e) = write_atomic(&path, &output.json) {
                    let _ = writeln!(stderr, "error[{}]: {e}", e.category.label());
                    return e.category.exit_code();
                }
            }
            let _ = write!(stdout, "{}", output.summary);
            0
        }
        Err(Failure { error, summary }) => {
            if let Some(s) = summary {
                let _ = write!(stdout, "{s}");
            }
            let _ = writeln!(stderr, "error[{}]: {error}", error.category.label());
            error.category.exit_code()
        }
    }
}

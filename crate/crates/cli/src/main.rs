//! `homgate`: command-line front end for the CNOT-gate simulator.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use homgate::measurement::TruthTableBasis;
use homgate::BellState;

use scenario::{Overrides, Scenario};

/// Errors the CLI raises itself, on top of the library's.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("analytic gate and Fock-space oracle disagree by {0:e}")]
    OracleMismatch(f64),
}

#[derive(Parser)]
#[command(name = "homgate", version, about = "Simulate a linear-optical CNOT gate fed by partially distinguishable photons")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; tables go to stdout when absent.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cross-check every gate evaluation against the Fock-space oracle.
    #[arg(long, global = true)]
    oracle: bool,
    /// Fixed indistinguishability, replacing the waveforms.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// White-noise admixture ε.
    #[arg(long, global = true)]
    noise: Option<f64>,
    /// Integration window duration in seconds.
    #[arg(long, global = true, value_name = "SECONDS")]
    tau_int: Option<f64>,
    /// Integration window start in seconds, relative to the memory peak.
    #[arg(long, global = true, value_name = "SECONDS", allow_hyphen_values = true)]
    window_offset: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model fidelity F(V) and the Werner prediction over a visibility grid.
    FidelityCurve {
        /// Number of evenly spaced points in [0, 1].
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Explicit comma-separated grid; overrides --points.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Overlap, fidelities, CHSH and process bounds versus window duration.
    WindowSweep {
        /// Comma-separated window durations in seconds.
        #[arg(long, value_delimiter = ',')]
        tau: Option<Vec<f64>>,
    },
    /// Simulated state tomography of the gate output.
    Tomography {
        /// phi+, phi-, psi+, psi- or all.
        #[arg(long, default_value = "phi+")]
        bell: String,
        /// Coincidences per measurement setting.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Hong-Ou-Mandel coincidence scan over relative delay.
    Hom {
        #[arg(long, default_value_t = -3e-9, allow_hyphen_values = true)]
        start: f64,
        #[arg(long, default_value_t = 3e-9, allow_hyphen_values = true)]
        stop: f64,
        #[arg(long, default_value_t = 5e-11)]
        step: f64,
    },
    /// Logical truth tables in the ZZ, XX and YY bases.
    TruthTable {
        /// zz, xx, yy or all.
        #[arg(long, default_value = "all")]
        basis: String,
    },
    /// Optimized CHSH value of the gate outputs.
    Chsh {
        /// phi+, phi-, psi+, psi- or all.
        #[arg(long, default_value = "all")]
        bell: String,
    },
}

fn parse_bell(s: &str) -> anyhow::Result<Option<BellState>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    Ok(Some(s.parse().map_err(|e: homgate::Error| CliError::Validation(e.to_string()))?))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut flags = Overrides {
        seed: cli.seed,
        out: cli.out,
        eta: cli.eta,
        noise: cli.noise,
        tau_int: cli.tau_int,
        offset: cli.window_offset,
        shots: None,
    };
    if let Command::Tomography { shots, .. } = &cli.command {
        flags.shots = *shots;
    }
    let mut scenario = Scenario::load(cli.config.as_deref(), &flags)?;
    match cli.command {
        Command::FidelityCurve { points, grid } => {
            let grid = match grid {
                Some(g) => g,
                None if points >= 2 => (0..points).map(|k| k as f64 / (points - 1) as f64).collect(),
                None => return Err(CliError::Validation("--points must be at least 2".into()).into()),
            };
            commands::fidelity_curve(&scenario, &grid, cli.oracle)
        }
        Command::WindowSweep { tau } => {
            if let Some(t) = tau {
                if t.is_empty() || t.iter().any(|x| !(*x > 0.0)) {
                    return Err(CliError::Validation("--tau needs positive durations".into()).into());
                }
                scenario.sweep = t;
            }
            commands::window_sweep(&scenario, cli.oracle)
        }
        Command::Tomography { bell, .. } => commands::tomography(&scenario, parse_bell(&bell)?, cli.oracle),
        Command::Hom { start, stop, step } => {
            if !(step > 0.0) || !(stop >= start) {
                return Err(CliError::Validation("need start <= stop and step > 0".into()).into());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            let delays: Vec<f64> = (0..=n).map(|k| start + k as f64 * step).collect();
            commands::hom(&scenario, &delays, cli.oracle)
        }
        Command::TruthTable { basis } => {
            let bases = if basis.eq_ignore_ascii_case("all") {
                vec![TruthTableBasis::ZZ, TruthTableBasis::XX, TruthTableBasis::YY]
            } else {
                vec![basis.parse().map_err(|e: homgate::Error| CliError::Validation(e.to_string()))?]
            };
            commands::truth_tables(&scenario, &bases, cli.oracle)
        }
        Command::Chsh { bell } => commands::chsh(&scenario, parse_bell(&bell)?, cli.oracle),
    }
}

/// 2 for bad input, 3 for an oracle disagreement, 1 for anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<CliError>() {
        return match e {
            CliError::Validation(_) => 2,
            CliError::OracleMismatch(_) => 3,
        };
    }
    if let Some(e) = err.downcast_ref::<homgate::Error>() {
        return if e.is_validation() { 2 } else { 1 };
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

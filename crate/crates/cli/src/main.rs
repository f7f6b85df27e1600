use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wavepath_cli::commands::McOverrides;
use wavepath_cli::{run_scenario, RunOptions, ScenarioConfig, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "wavepath", version, about = "Proper-time path-integral wave propagation scenarios")]
struct Cli {
    /// Scenario file (TOML); defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true, env = "WAVEPATH_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "WAVEPATH_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Tabulate the closed-form kernels against their analytic properties.
    KernelCheck,
    /// Monte Carlo Euclidean propagator with its z-score.
    McPropagate(McOverrides),
    /// Two-point ray with action, prefactor and residual.
    RayTrace,
    /// Factorized Green matrix at a list of times.
    GreenMatrix,
    /// Spectral reference solver time series.
    SpectralRun,
    /// Synthetic scattering tomography: forward data, inversion, reconstruction.
    Tomography,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => match ScenarioConfig::from_path(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ScenarioConfig::default(),
    };
    let cmd = match cli.command {
        Command::KernelCheck => Subcommand::KernelCheck,
        Command::McPropagate(o) => {
            o.apply(&mut cfg.mc_propagate);
            Subcommand::McPropagate
        }
        Command::RayTrace => Subcommand::RayTrace,
        Command::GreenMatrix => Subcommand::GreenMatrix,
        Command::SpectralRun => Subcommand::SpectralRun,
        Command::Tomography => Subcommand::Tomography,
    };
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let opts = RunOptions {
        seed: cli.seed,
        workers,
        out: cli.out,
    };
    match run_scenario(cmd, &cfg, &opts) {
        Ok(report) => {
            match serde_json::to_string_pretty(&report) {
                Ok(s) => println!("{s}"),
                Err(e) => eprintln!("error: {e}"),
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                for c in report.checks.iter().filter(|c| !c.passed) {
                    eprintln!("check failed: {} = {:e} (threshold {:e})", c.name, c.value, c.threshold);
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

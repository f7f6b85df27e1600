//! Scenario runner for `wavepath`: parses a scenario file, runs one
//! subcommand inside a sized worker pool, writes CSV/JSON artifacts and
//! returns a report whose `passed` flag aggregates the built-in oracle checks.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

pub use config::ScenarioConfig;
pub use error::CliError;
pub use output::{Check, RunReport};

use commands::CommandOutput;
use output::{OutputDir, Timestamp, TOOL, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    /// Tabulate the closed-form kernels against their analytic properties.
    KernelCheck,
    /// Monte Carlo Euclidean propagator with its z-score.
    McPropagate,
    /// Two-point ray with action, prefactor and residual.
    RayTrace,
    /// Factorized Green matrix at a list of times.
    GreenMatrix,
    /// Spectral reference solver time series.
    SpectralRun,
    /// Synthetic scattering tomography: forward data, inversion, reconstruction.
    Tomography,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::KernelCheck => "kernel-check",
            Subcommand::McPropagate => "mc-propagate",
            Subcommand::RayTrace => "ray-trace",
            Subcommand::GreenMatrix => "green-matrix",
            Subcommand::SpectralRun => "spectral-run",
            Subcommand::Tomography => "tomography",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

/// The medium and the subcommand's own table, as echoed into every artifact.
pub fn config_echo(cmd: Subcommand, cfg: &ScenarioConfig) -> Result<Value, CliError> {
    let params = match cmd {
        Subcommand::KernelCheck => serde_json::to_value(&cfg.kernel_check)?,
        Subcommand::McPropagate => serde_json::to_value(&cfg.mc_propagate)?,
        Subcommand::RayTrace => serde_json::to_value(&cfg.ray_trace)?,
        Subcommand::GreenMatrix => serde_json::to_value(&cfg.green_matrix)?,
        Subcommand::SpectralRun => serde_json::to_value(&cfg.spectral_run)?,
        Subcommand::Tomography => serde_json::to_value(&cfg.tomography)?,
    };
    Ok(json!({ "medium": cfg.medium, cmd.name(): params }))
}

/// Runs `cmd` and writes `<out>/<subcommand>.json` alongside its artifacts.
pub fn run_scenario(cmd: Subcommand, cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let unix_seconds = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    if opts.workers == 0 {
        return Err(CliError::config("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| CliError::config("workers", e.to_string()))?;
    let echo = config_echo(cmd, cfg)?;
    let out = OutputDir::create(&opts.out, &echo)?;
    let ctx = commands::Context {
        out: &out,
        seed: opts.seed,
        workers: opts.workers,
    };
    let CommandOutput { results, checks } = pool.install(|| commands::dispatch(cmd, cfg, &ctx))?;
    let report_name = format!("{}.json", cmd.name());
    let mut files = out.files();
    files.push(report_name.clone());
    let report = RunReport {
        tool: TOOL,
        version: VERSION,
        subcommand: cmd.name().to_string(),
        seed: opts.seed,
        workers: opts.workers,
        config: echo,
        results,
        passed: checks.iter().all(|c| c.passed),
        checks,
        files,
        timestamp: Timestamp {
            unix_seconds,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        },
    };
    out.json(&report_name, &report)?;
    Ok(report)
}

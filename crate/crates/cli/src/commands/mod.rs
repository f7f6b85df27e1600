//! One module per subcommand. Each owns its parameter table, writes its
//! artifacts and returns result fields plus oracle checks.

mod green;
mod kernel_check;
mod mc;
mod ray;
mod spectral;
mod tomography;

use serde_json::{Map, Value};
use wavepath::medium::{make_standard_medium, Medium};

pub use green::GreenParams;
pub use kernel_check::KernelCheckParams;
pub use mc::{McOverrides, McParams};
pub use ray::RayParams;
pub use spectral::SpectralParams;
pub use tomography::{TomographyParams, TruthMode};

use crate::config::ScenarioConfig;
use crate::error::{CliError, Context as _};
use crate::output::{Check, OutputDir};
use crate::Subcommand;

pub struct Context<'a> {
    pub out: &'a OutputDir,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Default)]
pub struct CommandOutput {
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
}

impl CommandOutput {
    pub fn set(&mut self, key: &str, value: impl serde::Serialize) -> Result<(), CliError> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }
}

pub fn dispatch(cmd: Subcommand, cfg: &ScenarioConfig, ctx: &Context) -> Result<CommandOutput, CliError> {
    let medium = make_standard_medium(&cfg.medium).context("medium")?;
    match cmd {
        Subcommand::KernelCheck => kernel_check::run(&cfg.kernel_check, &medium, ctx),
        Subcommand::McPropagate => mc::run(&cfg.mc_propagate, &medium, ctx),
        Subcommand::RayTrace => ray::run(&cfg.ray_trace, &medium, ctx),
        Subcommand::GreenMatrix => green::run(&cfg.green_matrix, &medium, ctx),
        Subcommand::SpectralRun => spectral::run(&cfg.spectral_run, &medium, ctx),
        Subcommand::Tomography => tomography::run(&cfg.tomography, &medium, ctx),
    }
}

/// `given`, or `fallback` when absent; the length must match the medium.
pub(crate) fn position(given: &Option<Vec<f64>>, fallback: Vec<f64>, medium: &Medium, path: &str) -> Result<Vec<f64>, CliError> {
    let x = given.clone().unwrap_or(fallback);
    if x.len() != medium.dim {
        return Err(CliError::config(
            path,
            format!("expected {} coordinates, got {}", medium.dim, x.len()),
        ));
    }
    Ok(x)
}

/// First coordinate `a`, the rest zero.
pub(crate) fn on_axis(dim: usize, a: f64) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    x[0] = a;
    x
}

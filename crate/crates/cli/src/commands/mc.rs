//! Euclidean Monte Carlo propagator with a z-score against the closed form.

use serde::{Deserialize, Serialize};
use wavepath::medium::Medium;
use wavepath::paths::{euclidean_propagator_mc, mc::euclidean_path_weights, McConfig};

use super::{on_axis, position, CommandOutput, Context};
use crate::error::{CliError, Context as _};
use crate::output::{fmt_f64, Check};

/// Rows written to the per-path dump at most.
pub const MAX_DUMP_ROWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McParams {
    /// Receiver; defaults to `0.3 e_1`.
    pub x: Option<Vec<f64>>,
    /// Source; defaults to the origin.
    pub xp: Option<Vec<f64>>,
    pub s: f64,
    pub steps: usize,
    pub n_paths: usize,
    /// Per-path weights written to `mc-paths.csv`, capped at 10⁴.
    pub dump_paths: usize,
    /// Largest accepted `|z|` when a closed form exists.
    pub z_max: f64,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            x: None,
            xp: None,
            s: 0.05,
            steps: 16,
            n_paths: 20_000,
            dump_paths: 0,
            z_max: 3.0,
        }
    }
}

/// Command-line overrides of the `[mc-propagate]` table.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct McOverrides {
    /// Receiver, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    /// Source, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub xp: Option<Vec<f64>>,
    /// Proper time.
    #[arg(long)]
    pub s: Option<f64>,
    /// Proper-time steps per path.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub dump_paths: Option<usize>,
}

impl McOverrides {
    pub fn apply(self, p: &mut McParams) {
        if self.x.is_some() {
            p.x = self.x;
        }
        if self.xp.is_some() {
            p.xp = self.xp;
        }
        if let Some(v) = self.s {
            p.s = v;
        }
        if let Some(v) = self.steps {
            p.steps = v;
        }
        if let Some(v) = self.n_paths {
            p.n_paths = v;
        }
        if let Some(v) = self.dump_paths {
            p.dump_paths = v;
        }
    }
}

pub fn run(p: &McParams, medium: &Medium, ctx: &Context) -> Result<CommandOutput, CliError> {
    let x = position(&p.x, on_axis(medium.dim, 0.3), medium, "mc-propagate.x")?;
    let xp = position(&p.xp, vec![0.0; medium.dim], medium, "mc-propagate.xp")?;
    let cfg = McConfig {
        steps: p.steps,
        n_paths: p.n_paths,
        seed: ctx.seed,
        workers: None,
    };
    let est = euclidean_propagator_mc(&x, &xp, p.s, medium, &cfg).context("mc-propagate")?;

    if p.dump_paths > 0 {
        let rows = p.dump_paths.min(MAX_DUMP_ROWS).min(p.n_paths);
        // Paths draw from independent streams, so these are the first
        // `rows` paths of the estimate.
        let mut weights = euclidean_path_weights(&x, &xp, p.s, medium, &cfg).context("mc-propagate")?;
        weights.truncate(rows);
        let mut w = ctx.out.csv("mc-paths.csv", &["path", "weight"])?;
        for (i, v) in weights.iter().enumerate() {
            w.write_record([i.to_string(), fmt_f64(*v)])?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: ctx.out.path("mc-paths.csv").display().to_string(),
            source,
        })?;
    }

    let mut out = CommandOutput::default();
    out.set("estimate", est.mean)?;
    out.set("stderr", est.standard_error)?;
    out.set("analytic_reference", est.reference)?;
    out.set("z_score", est.z_score)?;
    out.set("normalization", est.normalization)?;
    out.set("n_paths", est.n_paths)?;
    out.set("steps", est.steps)?;
    if let Some(z) = est.z_score {
        out.checks.push(Check::at_most("z-score", z.abs(), p.z_max));
    }
    out.checks.push(Check::at_most(
        "finite-estimate",
        if est.mean.is_finite() && est.standard_error.is_finite() { 0.0 } else { 1.0 },
        0.0,
    ));
    Ok(out)
}

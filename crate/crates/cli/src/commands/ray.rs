//! Two-point ray polyline with its action, prefactor and endpoint residual.

use serde::{Deserialize, Serialize};
use wavepath::medium::Medium;
use wavepath::rays::{ray_action, two_point_ray_with, van_vleck_prefactor, BvpOptions};

use super::{on_axis, position, CommandOutput, Context};
use crate::error::{CliError, Context as _};
use crate::output::{fmt_f64, Check};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RayParams {
    /// Receiver; defaults to `e_1 + 0.2 e_2` (or `e_1` in one dimension).
    pub x: Option<Vec<f64>>,
    /// Source; defaults to the origin.
    pub xp: Option<Vec<f64>>,
    pub s: f64,
    pub n_steps: usize,
    pub tol: f64,
    pub probe_multipath: bool,
    pub van_vleck: bool,
}

impl Default for RayParams {
    fn default() -> Self {
        Self {
            x: None,
            xp: None,
            s: 1.0,
            n_steps: 200,
            tol: 1e-10,
            probe_multipath: false,
            van_vleck: true,
        }
    }
}

pub fn run(p: &RayParams, medium: &Medium, ctx: &Context) -> Result<CommandOutput, CliError> {
    let n = medium.dim;
    let mut fallback = on_axis(n, 1.0);
    if n > 1 {
        fallback[1] = 0.2;
    }
    let x = position(&p.x, fallback, medium, "ray-trace.x")?;
    let xp = position(&p.xp, vec![0.0; n], medium, "ray-trace.xp")?;
    let opts = BvpOptions {
        probe_multipath: p.probe_multipath,
        ..Default::default()
    };
    let ray = two_point_ray_with(&x, &xp, medium, p.s, p.n_steps, p.tol, &opts).context("ray-trace")?;
    let action = ray_action(&ray, medium).context("ray-trace")?;
    // A caustic is reported, not fatal.
    let (prefactor, prefactor_error) = if p.van_vleck {
        match van_vleck_prefactor(&ray, medium) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };

    let mut columns = vec!["sigma".to_string()];
    columns.extend((1..=n).map(|i| format!("x{i}")));
    columns.extend((1..=n).map(|i| format!("v{i}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut w = ctx.out.csv("ray.csv", &cols)?;
    for ((sigma, r), v) in ray.sigma.iter().zip(&ray.positions).zip(&ray.velocities) {
        let mut rec = vec![fmt_f64(*sigma)];
        rec.extend(r.iter().map(|c| fmt_f64(*c)));
        rec.extend(v.iter().map(|c| fmt_f64(*c)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: ctx.out.path("ray.csv").display().to_string(),
        source,
    })?;

    let mut out = CommandOutput::default();
    out.set("action", action)?;
    out.set("prefactor", prefactor)?;
    out.set("prefactor_error", prefactor_error)?;
    out.set("residual", ray.residual)?;
    out.set("iterations", ray.iterations)?;
    out.set("multipath", ray.multipath)?;
    out.checks.push(Check::at_most("endpoint-residual", ray.residual, p.tol));
    if medium.velocity.is_constant() {
        let c = medium.velocity.speed(&xp);
        let d2: f64 = x.iter().zip(&xp).map(|(a, b)| (a - b) * (a - b)).sum();
        let exact = d2 / (p.s * c * c);
        out.set("straight_line_action", exact)?;
        out.checks.push(Check::at_most("straight-line-action", (action - exact).abs() / exact, 1e-8));
    }
    Ok(out)
}

//! Factorized Green matrix samples, with the homogeneous-limit area check.

use serde::{Deserialize, Serialize};
use wavepath::medium::Medium;
use wavepath::polarization::{FactorizedGreen, GreenConfig, Normalization};

use super::{on_axis, position, CommandOutput, Context};
use crate::error::{CliError, Context as _};
use crate::output::{fmt_f64, Check};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenParams {
    /// Receiver; defaults to `e_1`.
    pub x: Option<Vec<f64>>,
    /// Source; defaults to the origin.
    pub xp: Option<Vec<f64>>,
    pub t_src: f64,
    /// Sample times; defaults to `n_times` points over `[t', t' + 2T]` with
    /// `T` the travel-time scale.
    pub times: Option<Vec<f64>>,
    pub n_times: usize,
    /// Relative tolerance of the time-integrated diagonal against
    /// `1/(2 C0² r)` in homogeneous isotropic three-dimensional media.
    pub area_tol: f64,
    pub green: GreenConfig,
}

impl Default for GreenParams {
    fn default() -> Self {
        Self {
            x: None,
            xp: None,
            t_src: 0.0,
            times: None,
            n_times: 41,
            area_tol: 2e-2,
            green: GreenConfig::default(),
        }
    }
}

/// `τ = T(1 ± d)` with `d` log-spaced in `[1e-5, 1]`, so the shell at
/// `τ = T` is resolved on the window `[0, 2T]`.
pub(crate) fn shell_grid(t_scale: f64, per_side: usize) -> Vec<f64> {
    let d: Vec<f64> = (0..per_side)
        .map(|j| 1e-5 * (1e5f64).powf(j as f64 / (per_side - 1) as f64))
        .collect();
    let mut tau: Vec<f64> = d.iter().rev().map(|d| t_scale * (1.0 - d)).collect();
    tau.push(t_scale);
    tau.extend(d.iter().map(|d| t_scale * (1.0 + d)));
    tau
}

pub fn run(p: &GreenParams, medium: &Medium, ctx: &Context) -> Result<CommandOutput, CliError> {
    let n = medium.dim;
    let x = position(&p.x, on_axis(n, 1.0), medium, "green-matrix.x")?;
    let xp = position(&p.xp, vec![0.0; n], medium, "green-matrix.xp")?;
    let fg = FactorizedGreen::new(&x, &xp, medium, &p.green).context("green-matrix")?;
    let times = match &p.times {
        Some(t) => t.clone(),
        None => {
            if p.n_times < 2 {
                return Err(CliError::config("green-matrix.n_times", "need at least 2"));
            }
            (0..p.n_times)
                .map(|j| p.t_src + 2.0 * fg.t_scale * j as f64 / (p.n_times - 1) as f64)
                .collect()
        }
    };
    let f = fg.normalization_factor();
    let mut w = ctx.out.csv("green-matrix.csv", &["t", "i", "k", "real", "imag"])?;
    let mut finite = true;
    for &t in &times {
        let scalar = fg.scalar(t - p.t_src).context("green-matrix")?;
        for i in 0..n {
            for k in 0..n {
                let v = scalar * fg.polarization[(i, k)] * f;
                finite &= v.re.is_finite() && v.im.is_finite();
                w.write_record([fmt_f64(t), i.to_string(), k.to_string(), fmt_f64(v.re), fmt_f64(v.im)])?;
            }
        }
    }
    w.flush().map_err(|source| CliError::Io {
        path: ctx.out.path("green-matrix.csv").display().to_string(),
        source,
    })?;

    let mut out = CommandOutput::default();
    out.set("travel_time", fg.t_scale)?;
    out.set("c_mid", fg.c_mid)?;
    out.set("n_times", times.len())?;
    out.checks.push(Check::at_most("finite-entries", if finite { 0.0 } else { 1.0 }, 0.0));
    let homogeneous = medium.is_homogeneous_isotropic() && n == 3 && p.green.normalization == Normalization::HomogeneousLimit;
    if homogeneous {
        let tau = shell_grid(fg.t_scale, 250);
        let mut vals = Vec::with_capacity(tau.len() + 2);
        let mut grid = vec![0.0];
        grid.extend(tau);
        grid.push(2.0 * fg.t_scale);
        for &t in &grid {
            vals.push(fg.at(t).context("green-matrix")?.matrix[(0, 0)]);
        }
        let area = grid
            .windows(2)
            .zip(vals.windows(2))
            .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
            .sum::<f64>();
        let r: f64 = x.iter().zip(&xp).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let exact = 0.5 / (fg.c_mid * fg.c_mid * r);
        out.set("time_integral", area)?;
        out.set("time_integral_reference", exact)?;
        out.checks
            .push(Check::at_most("homogeneous-time-integral", (area - exact).abs() / exact, p.area_tol));
    }
    Ok(out)
}

//! Kernel tables over `(s, τ, r)` with closed-form modulus and area checks.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};
use wavepath::kernels::{free_time_kernel, homogeneous_space_kernel, retarded_green_homogeneous, short_time_amplitude};
use wavepath::medium::Medium;

use super::{on_axis, CommandOutput, Context};
use crate::error::{CliError, Context as _};
use crate::output::{fmt_f64, Check};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelCheckParams {
    pub s_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub separations: Vec<f64>,
    /// Width of the regularized shell of the retarded Green function.
    pub reg_width: f64,
}

impl Default for KernelCheckParams {
    fn default() -> Self {
        Self {
            s_values: vec![0.25, 0.5, 1.0, 2.0],
            tau_values: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            separations: vec![0.5, 1.0, 2.0],
            reg_width: 0.05,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn run(p: &KernelCheckParams, medium: &Medium, ctx: &Context) -> Result<CommandOutput, CliError> {
    let n = medium.dim;
    let origin = vec![0.0; n];
    let c0 = medium.velocity.checked_speed(&origin).context("kernel-check")?;
    let mut w = ctx.out.csv("kernel-check.csv", &["kernel", "s", "tau", "r", "i", "k", "real", "imag", "modulus"])?;
    let mut row = |kernel: &str, s: f64, tau: f64, r: f64, i: usize, k: usize, re: f64, im: f64| {
        w.write_record([
            kernel.to_string(),
            fmt_f64(s),
            fmt_f64(tau),
            fmt_f64(r),
            i.to_string(),
            k.to_string(),
            fmt_f64(re),
            fmt_f64(im),
            fmt_f64(re.hypot(im)),
        ])
    };

    let (mut time_mod, mut time_phase, mut space_mod, mut bracket_re) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &s in &p.s_values {
        for &tau in &p.tau_values {
            let k = free_time_kernel(tau, 0.0, s).context("kernel-check.free_time")?;
            row("free-time", s, tau, 0.0, 0, 0, k.re, k.im)?;
            time_mod = time_mod.max(rel(k.norm(), (4.0 * PI * s).powf(-0.5)));
            if tau == 0.0 {
                time_phase = time_phase.max((k.arg() + FRAC_PI_4).abs());
            }
        }
        for &r in &p.separations {
            let x = on_axis(n, r);
            let k = homogeneous_space_kernel(&x, &origin, s, c0, n).context("kernel-check.space")?;
            row("homogeneous-space", s, 0.0, r, 0, 0, k.re, k.im)?;
            space_mod = space_mod.max(rel(k.norm(), c0.powi(-2 * n as i32) * (4.0 * PI * s).powf(-(n as f64) / 2.0)));
            let st = short_time_amplitude(&x, &origin, s, medium).context("kernel-check.short_time")?;
            for i in 0..n {
                for j in 0..n {
                    let v = st.prefactor * st.bracket[(i, j)];
                    row("short-time-amplitude", s, 0.0, r, i, j, v.re, v.im)?;
                    let d = if i == j { 1.0 } else { 0.0 };
                    bracket_re = bracket_re.max((st.bracket[(i, j)].re - d).abs());
                }
            }
        }
    }

    // The shell integrates to 1/(2 C0² r) once it is clear of τ = 0.
    let mut area = 0.0f64;
    let mut area_checked = 0usize;
    for &r in &p.separations {
        for &tau in &p.tau_values {
            let g = retarded_green_homogeneous(&on_axis(n, r), &origin, tau, 0.0, c0, p.reg_width)
                .context("kernel-check.retarded_green")?;
            row("retarded-green", 0.0, tau, r, 0, 0, g, 0.0)?;
        }
        let half = 10.0 * p.reg_width;
        if r / c0 <= half {
            continue;
        }
        let m = 20_000;
        let (lo, hi) = (r / c0 - half, r / c0 + half);
        let h = (hi - lo) / m as f64;
        let mut sum = 0.0;
        for j in 0..=m {
            let tau = lo + j as f64 * h;
            let g = retarded_green_homogeneous(&on_axis(n, r), &origin, tau, 0.0, c0, p.reg_width)
                .context("kernel-check.retarded_green")?;
            sum += if j == 0 || j == m { 0.5 * g } else { g };
        }
        area = area.max(rel(sum * h, 0.5 / (c0 * c0 * r)));
        area_checked += 1;
    }
    w.flush().map_err(|source| CliError::Io {
        path: ctx.out.path("kernel-check.csv").display().to_string(),
        source,
    })?;

    let mut out = CommandOutput::default();
    out.set("c0", c0)?;
    out.set("dim", n)?;
    out.set("shell_area_separations", area_checked)?;
    out.checks = vec![
        Check::at_most("free-time-modulus", time_mod, 1e-12),
        Check::at_most("free-time-phase", time_phase, 1e-12),
        Check::at_most("space-kernel-modulus", space_mod, 1e-12),
        Check::at_most("short-time-bracket-real-part", bracket_re, 1e-14),
        Check::at_most("retarded-shell-area", area, 1e-6),
    ];
    Ok(out)
}

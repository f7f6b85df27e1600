//! Spectral reference run: impulsive source, receiver traces and energy
//! bookkeeping.

use serde::{Deserialize, Serialize};
use wavepath::medium::Medium;
use wavepath::spectral::{dirichlet_eigenbasis, BoxDomain, SpectralSystem};

use super::{CommandOutput, Context};
use crate::error::{CliError, Context as _};
use crate::output::{fmt_f64, Check};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralParams {
    /// Box side lengths; defaults to the unit box in the medium's dimension.
    pub lengths: Option<Vec<f64>>,
    /// Modes with `|λ| ≤ m_cut` are kept.
    pub m_cut: f64,
    /// Time step; defaults to `dt_fraction` times the stability bound.
    pub dt: Option<f64>,
    pub dt_fraction: f64,
    pub n_steps: usize,
    /// Source point; defaults to `0.37 L` on every axis.
    pub source: Option<Vec<f64>>,
    /// Polarization of the impulse.
    pub component: usize,
    /// Receivers; defaults to the box center.
    pub receivers: Option<Vec<Vec<f64>>>,
    /// Write every `every`-th step.
    pub every: usize,
    /// Largest relative energy excursion accepted in lossless media.
    pub energy_tol: f64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            lengths: None,
            m_cut: 400.0,
            dt: None,
            dt_fraction: 0.05,
            n_steps: 2000,
            source: None,
            component: 0,
            receivers: None,
            every: 10,
            energy_tol: 1e-2,
        }
    }
}

pub fn run(p: &SpectralParams, medium: &Medium, ctx: &Context) -> Result<CommandOutput, CliError> {
    let n = medium.dim;
    let lengths = p.lengths.clone().unwrap_or_else(|| vec![1.0; n]);
    if lengths.len() != n {
        return Err(CliError::config("spectral-run.lengths", format!("expected {n} lengths")));
    }
    if p.every == 0 {
        return Err(CliError::config("spectral-run.every", "must be at least 1"));
    }
    let domain = BoxDomain::new(lengths.clone()).context("spectral-run.lengths")?;
    let basis = dirichlet_eigenbasis(&domain, p.m_cut).context("spectral-run")?;
    let sys = SpectralSystem::assemble(&basis, medium).context("spectral-run")?;
    let bound = sys.stability_bound();
    let dt = p.dt.unwrap_or(p.dt_fraction * bound);
    let source = p.source.clone().unwrap_or_else(|| lengths.iter().map(|l| 0.37 * l).collect());
    let receivers = p.receivers.clone().unwrap_or_else(|| vec![domain.center()]);
    for (j, r) in receivers.iter().enumerate() {
        if r.len() != n {
            return Err(CliError::config(format!("spectral-run.receivers[{j}]"), format!("expected {n} coordinates")));
        }
    }
    let phis: Vec<Vec<f64>> = receivers.iter().map(|r| basis.phi_all(r)).collect();
    let init = sys.impulse(&source, p.component).context("spectral-run")?;
    let e0 = sys.energy(&init);

    let mut columns = vec!["t".to_string()];
    for j in 0..receivers.len() {
        columns.extend((1..=n).map(|i| format!("r{j}_u{i}")));
    }
    columns.push("energy".to_string());
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut w = ctx.out.csv("spectral-run.csv", &cols)?;
    let (mut step, mut drift, mut e_last, mut rising) = (0usize, 0.0f64, e0, 0.0f64);
    let mut write_err = None;
    sys.evolve_observed(init, dt, p.n_steps, |s| {
        let e = sys.energy(s);
        drift = drift.max((e - e0).abs() / e0.abs());
        rising = rising.max((e - e_last) / e0.abs());
        e_last = e;
        if step % p.every == 0 && write_err.is_none() {
            let mut rec = vec![fmt_f64(s.t)];
            for phi in &phis {
                rec.extend(sys.sample_with(s, phi).into_iter().map(fmt_f64));
            }
            rec.push(fmt_f64(e));
            if let Err(e) = w.write_record(&rec) {
                write_err = Some(e);
            }
        }
        step += 1;
    })
    .context("spectral-run")?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    w.flush().map_err(|source| CliError::Io {
        path: ctx.out.path("spectral-run.csv").display().to_string(),
        source,
    })?;

    let mut out = CommandOutput::default();
    out.set("n_modes", basis.len())?;
    out.set("stability_bound", bound)?;
    out.set("dt", dt)?;
    out.set("energy_initial", e0)?;
    out.set("energy_final", e_last)?;
    out.set("max_relative_energy_drift", drift)?;
    out.set("stiffness_asymmetry", sys.stiffness.asymmetry())?;
    if medium.is_lossless() {
        out.checks.push(Check::at_most("energy-conservation", drift, p.energy_tol));
    } else {
        out.checks.push(Check::at_most("energy-non-increasing", rising.max(0.0), 1e-12));
    }
    Ok(out)
}

//! Impulse response of the truncated system at a receiver.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SpectralBasis, SpectralSystem};
use crate::medium::Medium;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGreenOptions {
    pub dt: f64,
    /// Standard deviation of the Gaussian time filter applied to the sampled
    /// response; `None` keeps the raw samples.
    pub smoothing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGreen {
    pub t: Vec<f64>,
    /// `response[j][(i, k)]`: component `i` at the receiver for a source
    /// polarized along `e_k`, at time `t[j]`.
    pub response: Vec<DMatrix<f64>>,
}

impl SpectralGreen {
    pub fn entry(&self, i: usize, k: usize) -> Vec<f64> {
        self.response.iter().map(|m| m[(i, k)]).collect()
    }
}

/// Trapezoid rule over a possibly non-uniform grid.
pub fn time_integral(t: &[f64], values: &[f64]) -> f64 {
    t.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
        .sum()
}

/// Discrete Gaussian filter of standard deviation `sigma` on samples spaced
/// `dt`, treating samples before the first as zero.
fn smooth(raw: &[f64], dt: f64, sigma: f64) -> Vec<f64> {
    let half = (5.0 * sigma / dt).ceil() as isize;
    let w: Vec<f64> = (-half..=half)
        .map(|m| (-0.5 * (m as f64 * dt / sigma).powi(2)).exp())
        .collect();
    let norm: f64 = w.iter().sum();
    let n = raw.len() as isize;
    (0..n)
        .map(|j| {
            let mut s = 0.0;
            for (wi, m) in w.iter().zip(-half..=half) {
                let idx = j - m;
                if idx >= 0 && idx < n {
                    s += wi * raw[idx as usize];
                }
            }
            s / norm
        })
        .collect()
}

fn interpolate(raw: &[f64], dt: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let x = t / dt;
    let i = x.floor() as usize;
    if i + 1 >= raw.len() {
        return *raw.last().unwrap_or(&0.0);
    }
    let f = x - i as f64;
    raw[i] * (1.0 - f) + raw[i + 1] * f
}

/// Response at `x` to `δ(x − x') δ(t) e_k` for every `k`, sampled on `t_grid`.
pub fn spectral_green(
    x: &[f64],
    x_src: &[f64],
    t_grid: &[f64],
    medium: &Medium,
    basis: &SpectralBasis,
    opts: &SpectralGreenOptions,
) -> Result<SpectralGreen> {
    if !basis.domain.is_interior(x) {
        return Err(Error::Domain(format!("receiver {x:?} is not strictly inside the box")));
    }
    let sys = SpectralSystem::assemble(basis, medium)?;
    spectral_green_with(&sys, x, x_src, t_grid, opts)
}

/// [`spectral_green`] on an assembled system.
pub fn spectral_green_with(
    sys: &SpectralSystem,
    x: &[f64],
    x_src: &[f64],
    t_grid: &[f64],
    opts: &SpectralGreenOptions,
) -> Result<SpectralGreen> {
    let dt = opts.dt;
    let pad = opts.smoothing.map_or(0.0, |s| 6.0 * s);
    let t_end = t_grid.iter().cloned().fold(0.0, f64::max) + pad;
    let n_steps = (t_end / dt).ceil() as usize + 1;
    let phis = sys.basis.phi_all(x);
    let n = sys.n_comp;

    let runs: Vec<Result<Vec<Vec<f64>>>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let init = sys.impulse(x_src, k)?;
            let mut series = vec![Vec::with_capacity(n_steps + 1); n];
            sys.evolve_observed(init, dt, n_steps, |s| {
                for (i, v) in sys.sample_with(s, &phis).into_iter().enumerate() {
                    series[i].push(v);
                }
            })?;
            if let Some(sigma) = opts.smoothing {
                for s in series.iter_mut() {
                    *s = smooth(s, dt, sigma);
                }
            }
            Ok(series)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let response = t_grid
        .iter()
        .map(|&t| DMatrix::from_fn(n, n, |i, k| interpolate(&runs[k][i], dt, t)))
        .collect();
    Ok(SpectralGreen {
        t: t_grid.to_vec(),
        response,
    })
}

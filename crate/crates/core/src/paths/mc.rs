//! Monte Carlo estimate of the Euclidean (imaginary proper-time) spatial kernel
//!
//! ```text
//! K_E(x, x'; s) = lim ∫ Π_m dr_m  Π_m (4πΔσ C_m²)^{-N/2} exp(−|r_{m+1} − r_m|² / (4Δσ C_m²))
//! ```
//!
//! with `C_m = C0` at the midpoint of segment `m`. Paths are proposed as a free
//! random walk from `x'` with diffusion `C_ref²` over the first `M − 1` steps;
//! the final step to `x` enters through its exact transition density, so the
//! estimator is unbiased and its variance is finite even in homogeneous media.
//! For constant `C0` the estimate converges to `(4πsC0²)^{-N/2} e^{−|x−x'|²/(4sC0²)}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::medium::Medium;
use crate::stats;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Number of proper-time steps `M`.
    pub steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            steps: 16,
            n_paths: 100_000,
            seed: 0,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub n_paths: usize,
    pub steps: usize,
    pub seed: u64,
    /// `C_ref^{-2N}`, factored out of `mean` and `reference`.
    pub normalization: f64,
    /// Closed-form Gaussian for constant-speed media.
    pub reference: Option<f64>,
    pub z_score: Option<f64>,
}

/// `(4πsC0²)^{-N/2} exp(−r²/(4sC0²))`.
pub fn gaussian_kernel(r2: f64, s: f64, c0: f64, n: usize) -> f64 {
    let d = 4.0 * s * c0 * c0;
    (PI * d).powf(-(n as f64) / 2.0) * (-r2 / d).exp()
}

fn log_step_density(from: &[f64], to: &[f64], ds: f64, c: f64) -> f64 {
    let d = 4.0 * ds * c * c;
    let r2: f64 = from.iter().zip(to).map(|(a, b)| (b - a) * (b - a)).sum();
    -(from.len() as f64) / 2.0 * (PI * d).ln() - r2 / d
}

fn path_weight(x: &[f64], xp: &[f64], s: f64, medium: &Medium, steps: usize, c_ref: f64, seed: u64, index: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = x.len();
    let ds = s / steps as f64;
    let sd = (2.0 * ds).sqrt() * c_ref;
    let mut r = xp.to_vec();
    let mut next = vec![0.0; n];
    let mut mid = vec![0.0; n];
    let mut log_w = 0.0;
    for _ in 0..steps - 1 {
        for j in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            next[j] = r[j] + sd * z;
            mid[j] = 0.5 * (r[j] + next[j]);
        }
        let c = medium.velocity.checked_speed(&mid)?;
        if c != c_ref {
            log_w += log_step_density(&r, &next, ds, c) - log_step_density(&r, &next, ds, c_ref);
        }
        std::mem::swap(&mut r, &mut next);
    }
    for j in 0..n {
        mid[j] = 0.5 * (r[j] + x[j]);
    }
    let c = medium.velocity.checked_speed(&mid)?;
    log_w += log_step_density(&r, x, ds, c);
    Ok(log_w.exp())
}

/// Per-path weights in path-index order. Each path draws from its own
/// ChaCha8 stream, so the weights do not depend on the worker count.
pub fn euclidean_path_weights(x: &[f64], xp: &[f64], s: f64, medium: &Medium, cfg: &McConfig) -> Result<Vec<f64>> {
    if !medium.is_lossless() {
        return Err(Error::Unsupported("Euclidean Monte Carlo requires a lossless medium (ν ≡ 0)".into()));
    }
    if cfg.n_paths < 100 {
        return Err(Error::config("n_paths", "need at least 100 paths"));
    }
    if cfg.steps < 2 {
        return Err(Error::config("steps", "need M >= 2"));
    }
    if !(s > 0.0) {
        return Err(Error::Domain(format!("proper time s = {s} must be positive")));
    }
    medium.check_point(x)?;
    medium.check_point(xp)?;
    let chord_mid: Vec<f64> = x.iter().zip(xp).map(|(a, b)| 0.5 * (a + b)).collect();
    let c_ref = medium.velocity.checked_speed(&chord_mid)?;
    let run = || {
        (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| path_weight(x, xp, s, medium, cfg.steps, c_ref, cfg.seed, i))
            .collect::<Result<Vec<f64>>>()
    };
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?
            .install(run),
        None => run(),
    }
}

pub fn euclidean_propagator_mc(x: &[f64], xp: &[f64], s: f64, medium: &Medium, cfg: &McConfig) -> Result<McEstimate> {
    let weights = euclidean_path_weights(x, xp, s, medium, cfg)?;
    let (mean, se) = stats::mean_and_stderr(&weights);
    let chord_mid: Vec<f64> = x.iter().zip(xp).map(|(a, b)| 0.5 * (a + b)).collect();
    let c_ref = medium.velocity.speed(&chord_mid);
    let n = medium.dim;
    let reference = medium.velocity.is_constant().then(|| {
        let r2: f64 = x.iter().zip(xp).map(|(a, b)| (a - b) * (a - b)).sum();
        gaussian_kernel(r2, s, c_ref, n)
    });
    let z_score = reference.map(|r| if se > 0.0 { (mean - r) / se } else { 0.0 });
    Ok(McEstimate {
        mean,
        standard_error: se,
        n_paths: cfg.n_paths,
        steps: cfg.steps,
        seed: cfg.seed,
        normalization: c_ref.powi(-2 * n as i32),
        reference,
        z_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::DampingField;

    #[test]
    fn coincident_endpoints_1d() {
        let m = Medium::homogeneous(1, 1.0);
        let cfg = McConfig {
            steps: 8,
            n_paths: 20_000,
            seed: 5,
            workers: None,
        };
        let e = euclidean_propagator_mc(&[0.0], &[0.0], 1.0, &m, &cfg).unwrap();
        assert!((e.reference.unwrap() - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!(e.z_score.unwrap().abs() < 4.0, "{e:?}");
    }

    #[test]
    fn damping_is_rejected() {
        let m = Medium::homogeneous(1, 1.0).with_damping(DampingField::Constant(0.1));
        let r = euclidean_propagator_mc(&[0.0], &[0.0], 1.0, &m, &McConfig::default());
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn worker_count_does_not_change_weights() {
        let m = Medium::homogeneous(2, 1.3);
        let base = McConfig {
            steps: 6,
            n_paths: 500,
            seed: 9,
            workers: Some(1),
        };
        let a = euclidean_path_weights(&[0.5, 0.1], &[0.0, 0.0], 0.4, &m, &base).unwrap();
        let b = euclidean_path_weights(&[0.5, 0.1], &[0.0, 0.0], 0.4, &m, &McConfig { workers: Some(4), ..base }).unwrap();
        assert_eq!(a, b);
    }
}

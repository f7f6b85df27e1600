//! Discrete proper-time paths, their action terms and the stochastic oracle.
//!
//! The real-time path sum carries an oscillatory weight and is not sampled
//! directly. Monte Carlo runs only in imaginary proper time, where the
//! kinetic weight is a true probability measure; real-time quantities come
//! from the closed-form kernels and the ray module.

pub mod mc;
pub mod quadrature;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::medium::Medium;
use crate::{Error, Result};

pub use mc::{euclidean_propagator_mc, McConfig, McEstimate};
pub use quadrature::{proper_time_quadrature, proper_time_quadrature_on, regularized_integral, ProperTimeGrid};

/// Path on a uniform grid `σ_m = m s / M`, endpoints pinned.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub s: f64,
    /// `M + 1` spatial samples, `r_0 = x'`, `r_M = x`.
    pub positions: Vec<Vec<f64>>,
    /// `M + 1` temporal samples, `t_0 = t'`, `t_M = t`.
    pub times: Vec<f64>,
}

impl DiscretePath {
    /// Straight line in space and time.
    pub fn straight(x: &[f64], xp: &[f64], t: f64, t_src: f64, s: f64, steps: usize) -> Self {
        // Endpoints are copied so they are pinned bit for bit.
        let positions = (0..=steps)
            .map(|m| match m {
                0 => xp.to_vec(),
                m if m == steps => x.to_vec(),
                _ => {
                    let f = m as f64 / steps as f64;
                    xp.iter().zip(x).map(|(a, b)| a + (b - a) * f).collect()
                }
            })
            .collect();
        let times = (0..=steps)
            .map(|m| match m {
                0 => t_src,
                m if m == steps => t,
                _ => t_src + (t - t_src) * m as f64 / steps as f64,
            })
            .collect();
        Self { s, positions, times }
    }

    /// Builds a path from explicit samples.
    pub fn from_samples(s: f64, positions: Vec<Vec<f64>>, times: Vec<f64>) -> Result<Self> {
        if positions.len() < 3 || positions.len() != times.len() {
            return Err(Error::config("path", "need at least 3 samples of positions and times"));
        }
        if !(s > 0.0) {
            return Err(Error::Domain(format!("proper time s = {s} must be positive")));
        }
        Ok(Self { s, positions, times })
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    #[inline]
    pub fn dsigma(&self) -> f64 {
        self.s / self.steps() as f64
    }

    pub fn dim(&self) -> usize {
        self.positions[0].len()
    }

    /// Midpoint of segment `m` in space.
    pub fn midpoint(&self, m: usize) -> Vec<f64> {
        self.positions[m]
            .iter()
            .zip(&self.positions[m + 1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// `(r_{m+1} − r_m) / Δσ`.
    pub fn segment_velocity(&self, m: usize) -> Vec<f64> {
        let ds = self.dsigma();
        self.positions[m]
            .iter()
            .zip(&self.positions[m + 1])
            .map(|(a, b)| (b - a) / ds)
            .collect()
    }

    /// Same path traversed from `x` back to `x'`.
    pub fn reversed(&self) -> Self {
        let mut positions = self.positions.clone();
        positions.reverse();
        let mut times = self.times.clone();
        times.reverse();
        Self {
            s: self.s,
            positions,
            times,
        }
    }
}

/// Brownian bridge between `(x', t')` and `(x, t)`.
///
/// Unpinned increments have variance `2·variance_scale·Δσ` per coordinate; the
/// same scale is used for the time coordinate. With `variance_scale = 0` the
/// result is the straight line.
#[allow(clippy::too_many_arguments)]
pub fn sample_bridge(
    x: &[f64],
    xp: &[f64],
    t: f64,
    t_src: f64,
    s: f64,
    steps: usize,
    variance_scale: f64,
    seed: u64,
) -> Result<DiscretePath> {
    if steps < 2 {
        return Err(Error::config("steps", "need M >= 2"));
    }
    if !(s > 0.0) {
        return Err(Error::Domain(format!("proper time s = {s} must be positive")));
    }
    if variance_scale < 0.0 {
        return Err(Error::config("variance_scale", "must be >= 0"));
    }
    let mut path = DiscretePath::straight(x, xp, t, t_src, s, steps);
    if variance_scale == 0.0 {
        return Ok(path);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = (2.0 * variance_scale * s / steps as f64).sqrt();
    let n = x.len();
    // Coordinates 0..n are space, n is time.
    for c in 0..=n {
        let mut walk = vec![0.0; steps + 1];
        for m in 1..=steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            walk[m] = walk[m - 1] + sd * z;
        }
        let end = walk[steps];
        for m in 1..steps {
            let b = walk[m] - end * m as f64 / steps as f64;
            if c < n {
                path.positions[m][c] += b;
            } else {
                path.times[m] += b;
            }
        }
    }
    Ok(path)
}

/// The discretized exponents and measure of the path weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBreakdown {
    /// `¼ Σ (Δt/Δσ)² Δσ`
    pub time_kinetic: f64,
    /// `¼ Σ ν² Δσ`
    pub damping_sq: f64,
    /// `½ Σ ν (Δt/Δσ) Δσ`
    pub damping_cross: f64,
    /// `¼ Σ |Δr/Δσ|² / C0² Δσ`
    pub space_kinetic: f64,
    /// `−(N/2) Σ log C0`
    pub log_measure: f64,
}

/// Evaluates every term with the midpoint rule: `C0` and `ν` are sampled at the
/// space-time midpoint of each segment.
pub fn action_terms(path: &DiscretePath, medium: &Medium) -> Result<ActionBreakdown> {
    if path.dim() != medium.dim {
        return Err(Error::Dimension {
            expected: medium.dim,
            got: path.dim(),
        });
    }
    let ds = path.dsigma();
    let half_n = medium.dim as f64 / 2.0;
    let lossless = medium.is_lossless();
    let mut out = ActionBreakdown {
        time_kinetic: 0.0,
        damping_sq: 0.0,
        damping_cross: 0.0,
        space_kinetic: 0.0,
        log_measure: 0.0,
    };
    for m in 0..path.steps() {
        let mid = path.midpoint(m);
        let c = medium.velocity.checked_speed(&mid)?;
        let dt = path.times[m + 1] - path.times[m];
        let dr2: f64 = path.positions[m]
            .iter()
            .zip(&path.positions[m + 1])
            .map(|(a, b)| (b - a) * (b - a))
            .sum();
        out.time_kinetic += 0.25 * dt * dt / ds;
        out.space_kinetic += 0.25 * dr2 / (c * c * ds);
        out.log_measure -= half_n * c.ln();
        if !lossless {
            let nu = medium.damping.rate(&mid, 0.5 * (path.times[m] + path.times[m + 1]));
            out.damping_sq += 0.25 * nu * nu * ds;
            out.damping_cross += 0.5 * nu * dt;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::DampingField;

    #[test]
    fn bridge_pins_endpoints() {
        let p = sample_bridge(&[1.0, 2.0], &[0.0, -1.0], 3.0, 0.5, 2.0, 7, 0.8, 11).unwrap();
        assert_eq!(p.positions[0], vec![0.0, -1.0]);
        assert_eq!(p.positions[7], vec![1.0, 2.0]);
        assert_eq!(p.times[0], 0.5);
        assert_eq!(p.times[7], 3.0);
    }

    #[test]
    fn zero_variance_is_straight() {
        let p = sample_bridge(&[1.0, 0.0], &[0.0, 0.0], 1.0, 0.0, 1.0, 4, 0.0, 3).unwrap();
        assert_eq!(p, DiscretePath::straight(&[1.0, 0.0], &[0.0, 0.0], 1.0, 0.0, 1.0, 4));
    }

    #[test]
    fn midpoint_variance() {
        // Midpoint of a bridge over [0, s] with diffusion 2v: variance 2v·(s/2)(s/2)/s = v·s/2.
        let (v, s, n) = (0.7, 1.3, 100_000);
        let samples: Vec<f64> = (0..n)
            .map(|i| sample_bridge(&[0.0], &[0.0], 0.0, 0.0, s, 2, v, i).unwrap().positions[1][0])
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let expect = v * s / 2.0;
        // Standard error of a Gaussian sample variance is σ²√(2/(n−1)).
        let se = expect * (2.0 / (n - 1) as f64).sqrt();
        assert!((var - expect).abs() < 5.0 * se, "var {var} vs {expect}");
        assert!(mean.abs() < 5.0 * (expect / n as f64).sqrt());
    }

    #[test]
    fn straight_path_action() {
        let m = Medium::homogeneous(3, 1.0);
        let p = DiscretePath::straight(&[1.0, 0.0, 0.0], &[0.0; 3], 0.0, 0.0, 1.0, 10);
        let a = action_terms(&p, &m).unwrap();
        assert!((a.space_kinetic - 0.25).abs() < 1e-15);
        assert_eq!((a.time_kinetic, a.damping_sq, a.damping_cross, a.log_measure), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_damping_terms() {
        let m = Medium::homogeneous(1, 1.0).with_damping(DampingField::Constant(2.0));
        let p = DiscretePath::straight(&[0.0], &[0.0], 1.0, 0.0, 1.0, 8);
        let a = action_terms(&p, &m).unwrap();
        assert!((a.damping_sq - 1.0).abs() < 1e-14);
        assert!((a.damping_cross - 1.0).abs() < 1e-14);
        assert!((a.time_kinetic - 0.25).abs() < 1e-14);
    }
}

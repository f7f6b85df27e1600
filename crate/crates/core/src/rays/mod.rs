//! Geometrical-optics rays of the functional `S[r] = ∫₀^s dσ |dr/dσ|² / C0²(r)`.
//!
//! `σ` is the proper-time parameter, not arclength, and `s` is fixed in
//! advance. The Euler–Lagrange equations are integrated in Hamiltonian form
//! with `p = ṙ/C0²`:
//!
//! ```text
//! ṙ = C0² p,    ṗ = −C0 |p|² ∇C0
//! ```
//!
//! so `p` is constant in homogeneous media and `C0²|p|² = |ṙ|²/C0²` is
//! conserved in any static medium. The refraction index is identified with
//! `n0 = 1/C0`.

mod bvp;
mod van_vleck;

use serde::{Deserialize, Serialize};

use crate::medium::Medium;
use crate::{Error, Result};

pub use bvp::{two_point_ray, two_point_ray_with, BvpOptions};
pub use van_vleck::{
    action_hessian, discrete_action, discrete_action_gradient, factorize, van_vleck_prefactor, BlockTridiagonal,
    HessianFactorization,
};

/// Whether a second stationary path was found near the returned one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multipath {
    NotProbed,
    NoneFound,
    Possible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayPath {
    pub s: f64,
    pub sigma: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    /// `dR/dσ` at each node.
    pub velocities: Vec<Vec<f64>>,
    /// Initial velocity at `σ = 0`.
    pub v0: Vec<f64>,
    /// Endpoint residual for boundary-value rays, zero for shot rays.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub multipath: Multipath,
}

impl RayPath {
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.v0.len()
    }

    pub fn start(&self) -> &[f64] {
        &self.positions[0]
    }

    pub fn end(&self) -> &[f64] {
        &self.positions[self.steps()]
    }

    /// Straight chord from `xp` to `x` traversed in proper time `s`.
    pub fn chord(x: &[f64], xp: &[f64], s: f64, n_steps: usize) -> Self {
        let v: Vec<f64> = x.iter().zip(xp).map(|(a, b)| (a - b) / s).collect();
        let sigma: Vec<f64> = (0..=n_steps).map(|m| s * m as f64 / n_steps as f64).collect();
        let positions = sigma
            .iter()
            .map(|&sg| xp.iter().zip(&v).map(|(a, b)| a + b * sg).collect())
            .collect();
        Self {
            s,
            velocities: vec![v.clone(); n_steps + 1],
            sigma,
            positions,
            v0: v,
            residual: 0.0,
            converged: true,
            iterations: 0,
            multipath: Multipath::NotProbed,
        }
    }
}

fn derivs(medium: &Medium, r: &[f64], p: &[f64], dr: &mut [f64], dp: &mut [f64]) -> Result<()> {
    let c = medium.velocity.checked_speed(r)?;
    let g = medium.velocity.gradient(r);
    let p2: f64 = p.iter().map(|v| v * v).sum();
    for j in 0..r.len() {
        dr[j] = c * c * p[j];
        dp[j] = -c * p2 * g[j];
    }
    Ok(())
}

/// Integrates the ray from `x0` with initial velocity `v0` over `[0, s]` using
/// classical fourth-order Runge–Kutta.
pub fn shoot_ray(x0: &[f64], v0: &[f64], medium: &Medium, s: f64, n_steps: usize) -> Result<RayPath> {
    if n_steps < 10 {
        return Err(Error::config("n_steps", "need at least 10 steps"));
    }
    if !(s > 0.0) {
        return Err(Error::Domain(format!("proper time s = {s} must be positive")));
    }
    if x0.len() != medium.dim || v0.len() != medium.dim {
        return Err(Error::Dimension {
            expected: medium.dim,
            got: x0.len().max(v0.len()),
        });
    }
    let n = medium.dim;
    let h = s / n_steps as f64;
    let fail = |m: usize| Error::Integration {
        last_good_sigma: h * m as f64,
    };
    let c0 = medium.velocity.checked_speed(x0).map_err(|_| fail(0))?;
    let mut r = x0.to_vec();
    let mut p: Vec<f64> = v0.iter().map(|v| v / (c0 * c0)).collect();
    let mut positions = Vec::with_capacity(n_steps + 1);
    let mut velocities = Vec::with_capacity(n_steps + 1);
    positions.push(r.clone());
    velocities.push(v0.to_vec());

    let (mut k1r, mut k1p) = (vec![0.0; n], vec![0.0; n]);
    let (mut k2r, mut k2p) = (vec![0.0; n], vec![0.0; n]);
    let (mut k3r, mut k3p) = (vec![0.0; n], vec![0.0; n]);
    let (mut k4r, mut k4p) = (vec![0.0; n], vec![0.0; n]);
    let mut tr = vec![0.0; n];
    let mut tp = vec![0.0; n];
    for m in 0..n_steps {
        let step = |res: Result<()>| res.map_err(|_| fail(m));
        step(derivs(medium, &r, &p, &mut k1r, &mut k1p))?;
        for j in 0..n {
            tr[j] = r[j] + 0.5 * h * k1r[j];
            tp[j] = p[j] + 0.5 * h * k1p[j];
        }
        step(derivs(medium, &tr, &tp, &mut k2r, &mut k2p))?;
        for j in 0..n {
            tr[j] = r[j] + 0.5 * h * k2r[j];
            tp[j] = p[j] + 0.5 * h * k2p[j];
        }
        step(derivs(medium, &tr, &tp, &mut k3r, &mut k3p))?;
        for j in 0..n {
            tr[j] = r[j] + h * k3r[j];
            tp[j] = p[j] + h * k3p[j];
        }
        step(derivs(medium, &tr, &tp, &mut k4r, &mut k4p))?;
        for j in 0..n {
            r[j] += h / 6.0 * (k1r[j] + 2.0 * k2r[j] + 2.0 * k3r[j] + k4r[j]);
            p[j] += h / 6.0 * (k1p[j] + 2.0 * k2p[j] + 2.0 * k3p[j] + k4p[j]);
        }
        if r.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(fail(m));
        }
        let c = medium.velocity.checked_speed(&r).map_err(|_| fail(m))?;
        positions.push(r.clone());
        velocities.push(p.iter().map(|v| v * c * c).collect());
    }
    Ok(RayPath {
        s,
        sigma: (0..=n_steps).map(|m| h * m as f64).collect(),
        positions,
        velocities,
        v0: v0.to_vec(),
        residual: 0.0,
        converged: true,
        iterations: 0,
        multipath: Multipath::NotProbed,
    })
}

/// Trapezoid value of `∫ |v|² / C0²(r) dσ` over samples on a uniform grid of step `h`.
pub fn path_functional(positions: &[Vec<f64>], velocities: &[Vec<f64>], h: f64, medium: &Medium) -> Result<f64> {
    let m = positions.len() - 1;
    let mut acc = 0.0;
    for i in 0..=m {
        let c = medium.velocity.checked_speed(&positions[i])?;
        let v2: f64 = velocities[i].iter().map(|v| v * v).sum();
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        acc += w * v2 / (c * c);
    }
    Ok(acc * h)
}

/// `∫₀^s dσ |Ṙ|² / C0²(R)` along the ray (trapezoid rule).
pub fn ray_action(ray: &RayPath, medium: &Medium) -> Result<f64> {
    path_functional(&ray.positions, &ray.velocities, ray.s / ray.steps() as f64, medium)
}

/// `|Ṙ|²/C0²` at every node; constant for an exact ray in a static medium.
pub fn lagrangian_profile(ray: &RayPath, medium: &Medium) -> Vec<f64> {
    ray.positions
        .iter()
        .zip(&ray.velocities)
        .map(|(r, v)| {
            let c = medium.velocity.speed(r);
            v.iter().map(|x| x * x).sum::<f64>() / (c * c)
        })
        .collect()
}

/// Largest interior residual of `d/dσ(Ṙ/C0²) − ½ ∇(C0^{-2}) |Ṙ|²`, using
/// central differences in `σ`.
pub fn ray_residual(ray: &RayPath, medium: &Medium) -> f64 {
    let h = ray.s / ray.steps() as f64;
    let mom: Vec<Vec<f64>> = ray
        .positions
        .iter()
        .zip(&ray.velocities)
        .map(|(r, v)| {
            let c = medium.velocity.speed(r);
            v.iter().map(|x| x / (c * c)).collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for m in 1..ray.steps() {
        let r = &ray.positions[m];
        let c = medium.velocity.speed(r);
        let g = medium.velocity.gradient(r);
        let v2: f64 = ray.velocities[m].iter().map(|x| x * x).sum();
        for j in 0..r.len() {
            let lhs = (mom[m + 1][j] - mom[m - 1][j]) / (2.0 * h);
            let rhs = -g[j] / c.powi(3) * v2;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{make_standard_medium, ScenarioDescriptor};

    fn lens(amplitude: f64) -> Medium {
        make_standard_medium(
            &ScenarioDescriptor::from_toml_str(&format!(
                "kind = \"gaussian-lens\"\nc0 = 1.0\namplitude = {amplitude}\ncenter = [0.5, 0.2, 0.0]\nwidth = 0.5\n"
            ))
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn straight_in_homogeneous_medium() {
        let m = Medium::homogeneous(3, 1.7);
        let x0 = [0.1, -0.2, 0.3];
        let v0 = [0.5, 1.0, -0.25];
        let ray = shoot_ray(&x0, &v0, &m, 2.0, 50).unwrap();
        for (sg, r) in ray.sigma.iter().zip(&ray.positions) {
            for j in 0..3 {
                assert!((r[j] - (x0[j] + v0[j] * sg)).abs() < 1e-10);
            }
        }
        for v in &ray.velocities {
            for j in 0..3 {
                assert!((v[j] / (1.7 * 1.7) - v0[j] / (1.7 * 1.7)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lagrangian_conserved_in_lens_with_fourth_order_error() {
        let m = lens(0.3);
        let drift = |n: usize| {
            let ray = shoot_ray(&[-1.0, 0.0, 0.0], &[1.0, 0.1, 0.0], &m, 2.0, n).unwrap();
            let l = lagrangian_profile(&ray, &m);
            l.iter().map(|v| (v - l[0]).abs()).fold(0.0, f64::max)
        };
        let (d1, d2) = (drift(200), drift(400));
        assert!(d2 < 1e-8, "drift {d2}");
        let ratio = d1 / d2;
        assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
    }

    #[test]
    fn action_examples() {
        let m = Medium::homogeneous(3, 1.0);
        let ray = shoot_ray(&[0.0; 3], &[1.0, 0.0, 0.0], &m, 1.0, 20).unwrap();
        assert!((ray_action(&ray, &m).unwrap() - 1.0).abs() < 1e-14);
        // Doubling s at fixed endpoints halves the action.
        let ray2 = shoot_ray(&[0.0; 3], &[0.5, 0.0, 0.0], &m, 2.0, 20).unwrap();
        assert!((ray_action(&ray2, &m).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn shot_ray_satisfies_euler_lagrange() {
        let m = lens(0.2);
        let ray = shoot_ray(&[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.1], &m, 2.0, 2000).unwrap();
        assert!(ray_residual(&ray, &m) < 1e-5);
    }
}

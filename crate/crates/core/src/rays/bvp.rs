//! Two-point rays by shooting on the initial velocity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{shoot_ray, Multipath, RayPath};
use crate::medium::Medium;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvpOptions {
    pub max_iterations: usize,
    /// Also solve from perturbed seeds and flag a second solution.
    pub probe_multipath: bool,
    /// Relative size of the seed perturbations used by the probe.
    pub probe_scale: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            probe_multipath: false,
            probe_scale: 0.5,
        }
    }
}

fn endpoint(xp: &[f64], v0: &[f64], medium: &Medium, s: f64, n_steps: usize) -> Result<Vec<f64>> {
    let ray = shoot_ray(xp, v0, medium, s, n_steps)?;
    Ok(ray.positions[n_steps].clone())
}

fn misfit(end: &[f64], x: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), end.iter().zip(x).map(|(a, b)| a - b))
}

struct Solve {
    v0: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// Damped Newton iteration with a central-difference Jacobian.
fn newton(x: &[f64], xp: &[f64], medium: &Medium, s: f64, n_steps: usize, tol: f64, seed: Vec<f64>, max_it: usize) -> Solve {
    let n = x.len();
    let mut v0 = seed;
    let mut f = match endpoint(xp, &v0, medium, s, n_steps) {
        Ok(e) => misfit(&e, x),
        Err(_) => {
            return Solve {
                v0,
                residual: f64::INFINITY,
                iterations: 0,
                converged: false,
            }
        }
    };
    let mut res = f.norm();
    let mut it = 0;
    while res >= tol && it < max_it {
        it += 1;
        let scale = v0.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let h = 1e-6 * scale;
        let mut jac = DMatrix::zeros(n, n);
        let mut ok = true;
        for j in 0..n {
            let mut vp = v0.clone();
            vp[j] += h;
            let mut vm = v0.clone();
            vm[j] -= h;
            match (endpoint(xp, &vp, medium, s, n_steps), endpoint(xp, &vm, medium, s, n_steps)) {
                (Ok(ep), Ok(em)) => {
                    for i in 0..n {
                        jac[(i, j)] = (ep[i] - em[i]) / (2.0 * h);
                    }
                }
                _ => ok = false,
            }
        }
        let Some(step) = ok.then(|| jac.lu().solve(&f)).flatten() else {
            break;
        };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = v0.iter().zip(step.iter()).map(|(v, d)| v - lambda * d).collect();
            if let Ok(e) = endpoint(xp, &trial, medium, s, n_steps) {
                let ft = misfit(&e, x);
                if ft.norm() < res {
                    v0 = trial;
                    f = ft;
                    res = f.norm();
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Solve {
        v0,
        residual: res,
        iterations: it,
        converged: res < tol,
    }
}

/// Ray from `xp` (at `σ = 0`) to `x` (at `σ = s`), seeded from the chord.
pub fn two_point_ray(x: &[f64], xp: &[f64], medium: &Medium, s: f64, n_steps: usize, tol: f64) -> Result<RayPath> {
    two_point_ray_with(x, xp, medium, s, n_steps, tol, &BvpOptions::default())
}

pub fn two_point_ray_with(
    x: &[f64],
    xp: &[f64],
    medium: &Medium,
    s: f64,
    n_steps: usize,
    tol: f64,
    opts: &BvpOptions,
) -> Result<RayPath> {
    medium.check_point(x)?;
    medium.check_point(xp)?;
    let chord: Vec<f64> = x.iter().zip(xp).map(|(a, b)| (a - b) / s).collect();
    let sol = newton(x, xp, medium, s, n_steps, tol, chord.clone(), opts.max_iterations);
    if !sol.converged {
        return Err(Error::BvpFailure {
            best_residual: sol.residual,
            iterations: sol.iterations,
        });
    }
    let mut ray = shoot_ray(xp, &sol.v0, medium, s, n_steps)?;
    ray.residual = sol.residual;
    ray.iterations = sol.iterations;
    ray.converged = true;
    if opts.probe_multipath {
        ray.multipath = probe(x, xp, medium, s, n_steps, tol, &chord, &sol.v0, opts);
    }
    Ok(ray)
}

fn probe(x: &[f64], xp: &[f64], medium: &Medium, s: f64, n_steps: usize, tol: f64, chord: &[f64], found: &[f64], opts: &BvpOptions) -> Multipath {
    let n = chord.len();
    let speed = chord.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let norm_found = found.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut seed = chord.to_vec();
            seed[j] += sign * opts.probe_scale * speed;
            let sol = newton(x, xp, medium, s, n_steps, tol, seed, opts.max_iterations);
            if sol.converged {
                let d: f64 = sol.v0.iter().zip(found).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if d > 1e-4 * norm_found {
                    return Multipath::Possible;
                }
            }
        }
    }
    Multipath::NoneFound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{make_standard_medium, ScenarioDescriptor};
    use crate::rays::ray_action;

    fn lens(amplitude: f64, center: [f64; 3], width: f64) -> Medium {
        let mut spec = ScenarioDescriptor::homogeneous(3, 1.0);
        spec.kind = crate::medium::scenario::ScenarioKind::GaussianLens {
            c0: 1.0,
            amplitude,
            center: Some(center.to_vec()),
            width,
        };
        make_standard_medium(&spec).unwrap()
    }

    #[test]
    fn homogeneous_gives_chord() {
        let m = Medium::homogeneous(3, 1.4);
        let ray = two_point_ray(&[1.0, 0.5, -0.2], &[0.0; 3], &m, 0.8, 40, 1e-10).unwrap();
        for (a, b) in ray.v0.iter().zip([1.0, 0.5, -0.2]) {
            assert!((a - b / 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_lens_converges_near_chord() {
        let a = 1e-3;
        let m = lens(a, [0.5, 0.1, 0.0], 0.4);
        let x = [1.0, 0.0, 0.0];
        let ray = two_point_ray(&x, &[0.0; 3], &m, 1.0, 200, 1e-10).unwrap();
        assert!(ray.residual < 1e-9);
        for (sg, r) in ray.sigma.iter().zip(&ray.positions) {
            let dev: f64 = (0..3).map(|j| (r[j] - x[j] * sg).powi(2)).sum::<f64>().sqrt();
            assert!(dev < 10.0 * a, "deviation {dev}");
        }
    }

    #[test]
    fn round_trip_recovers_initial_velocity() {
        let m = lens(0.2, [0.4, 0.3, 0.0], 0.5);
        let v0 = [0.9, 0.2, -0.1];
        let shot = shoot_ray(&[0.0; 3], &v0, &m, 1.2, 300).unwrap();
        let end = shot.end().to_vec();
        let ray = two_point_ray(&end, &[0.0; 3], &m, 1.2, 300, 1e-11).unwrap();
        for (a, b) in ray.v0.iter().zip(v0) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn bvp_does_not_exceed_chord_action_in_fast_lens() {
        let m = lens(0.3, [0.5, 0.05, 0.0], 0.3);
        let x = [1.0, 0.0, 0.0];
        let ray = two_point_ray(&x, &[0.0; 3], &m, 1.0, 400, 1e-10).unwrap();
        let chord = RayPath::chord(&x, &[0.0; 3], 1.0, 400);
        assert!(ray_action(&ray, &m).unwrap() <= ray_action(&chord, &m).unwrap() + 1e-12);
    }
}

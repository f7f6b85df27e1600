//! Second variation of the discretized ray action and the Van Vleck prefactor.
//!
//! The action is discretized on the ray's grid as
//!
//! ```text
//! S_d = Σ_m |r_{m+1} − r_m|² / Δσ · u((r_m + r_{m+1})/2),   u = C0^{-2}
//! ```
//!
//! with both endpoints pinned. Its Hessian over the interior nodes is block
//! tridiagonal; a block LDLᵀ sweep yields the log-determinant and the inertia.
//! The prefactor is `(det H_ray / det H_free)^{-1/2}`, each determinant divided
//! by its midpoint measure `Π_m (2u(c_m)/Δσ)^N`, where `H_free` is built
//! by the same code with `C0` frozen at the chord midpoint, so a homogeneous
//! medium gives exactly 1.

use nalgebra::{DMatrix, DVector};

use super::RayPath;
use crate::medium::field::{Constant, ScalarField};
use crate::medium::Medium;
use crate::{Error, Result};

/// `u = C0^{-2}` with its gradient and Hessian.
fn u_derivs(field: &dyn ScalarField, x: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let c = field.value(x);
    let g = DVector::from_vec(field.gradient(x));
    let h = field.hessian(x);
    let u = c.powi(-2);
    let gu = &g * (-2.0 * c.powi(-3));
    let hu = &g * g.transpose() * (6.0 * c.powi(-4)) - h * (2.0 * c.powi(-3));
    (u, gu, hu)
}

fn segment(a: &[f64], b: &[f64]) -> (DVector<f64>, Vec<f64>) {
    let d = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(p, q)| q - p));
    let c = a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect();
    (d, c)
}

pub fn discrete_action(positions: &[Vec<f64>], s: f64, medium: &Medium) -> f64 {
    let m = positions.len() - 1;
    let h = s / m as f64;
    (0..m)
        .map(|k| {
            let (d, c) = segment(&positions[k], &positions[k + 1]);
            d.norm_squared() / h * medium.velocity.speed(&c).powi(-2)
        })
        .sum()
}

/// Gradient of [`discrete_action`] with respect to the interior nodes, stacked.
pub fn discrete_action_gradient(positions: &[Vec<f64>], s: f64, medium: &Medium) -> DVector<f64> {
    let m = positions.len() - 1;
    let n = positions[0].len();
    let h = s / m as f64;
    let mut g = DVector::zeros((m - 1) * n);
    for k in 0..m {
        let (d, c) = segment(&positions[k], &positions[k + 1]);
        let cv = medium.velocity.speed(&c);
        let gc = medium.velocity.gradient(&c);
        let u = cv.powi(-2);
        let d2 = d.norm_squared();
        for (node, sign) in [(k, -1.0), (k + 1, 1.0)] {
            if node == 0 || node == m {
                continue;
            }
            for i in 0..n {
                let gu = -2.0 * cv.powi(-3) * gc[i];
                g[(node - 1) * n + i] += sign * 2.0 * u * d[i] / h + 0.5 * d2 * gu / h;
            }
        }
    }
    g
}

/// Symmetric block-tridiagonal matrix with `N×N` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    pub diag: Vec<DMatrix<f64>>,
    /// `off[k]` couples interior nodes `k` and `k + 1` (row block `k`).
    pub off: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let nb = self.diag.len();
        let n = self.diag[0].nrows();
        let mut out = DVector::zeros(nb * n);
        for k in 0..nb {
            let mut acc = &self.diag[k] * v.rows(k * n, n);
            if k + 1 < nb {
                acc += &self.off[k] * v.rows((k + 1) * n, n);
            }
            if k > 0 {
                acc += self.off[k - 1].transpose() * v.rows((k - 1) * n, n);
            }
            out.rows_mut(k * n, n).copy_from(&acc);
        }
        out
    }
}

fn hessian_with(positions: &[Vec<f64>], s: f64, field: &dyn ScalarField) -> BlockTridiagonal {
    let m = positions.len() - 1;
    let n = positions[0].len();
    let h = s / m as f64;
    let mut diag = vec![DMatrix::zeros(n, n); m - 1];
    let mut off = vec![DMatrix::zeros(n, n); m.saturating_sub(2)];
    let eye = DMatrix::<f64>::identity(n, n);
    for k in 0..m {
        let (d, c) = segment(&positions[k], &positions[k + 1]);
        let (u, gu, hu) = u_derivs(field, &c);
        let block = |sa: f64, sb: f64| -> DMatrix<f64> {
            &eye * (2.0 * u / h * sa * sb) + &d * gu.transpose() * (sa / h) + &gu * d.transpose() * (sb / h)
                + &hu * (d.norm_squared() / (4.0 * h))
        };
        let (a, b) = (k, k + 1);
        if a >= 1 {
            diag[a - 1] += block(-1.0, -1.0);
        }
        if b < m {
            diag[b - 1] += block(1.0, 1.0);
        }
        if a >= 1 && b < m {
            off[a - 1] += block(-1.0, 1.0);
        }
    }
    BlockTridiagonal { diag, off }
}

/// Hessian of the discrete action about the nodes of `ray`.
pub fn action_hessian(ray: &RayPath, medium: &Medium) -> BlockTridiagonal {
    hessian_with(&ray.positions, ray.s, medium.velocity.field())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianFactorization {
    pub log_det: f64,
    /// Number of negative eigenvalues met across the pivot blocks.
    pub negative: usize,
    /// First pivot block with a negative eigenvalue, and that eigenvalue.
    pub first_negative: Option<(usize, f64)>,
}

/// Block LDLᵀ sweep returning `log |det H|` and the inertia.
pub fn factorize(hm: &BlockTridiagonal) -> Result<HessianFactorization> {
    let mut log_det = 0.0;
    let mut negative = 0;
    let mut first_negative = None;
    let mut prev: Option<DMatrix<f64>> = None;
    for k in 0..hm.diag.len() {
        let mut pivot = hm.diag[k].clone();
        if let Some(p) = &prev {
            let b = &hm.off[k - 1];
            let inv = p
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Singularity(format!("singular Hessian pivot block {}", k - 1)))?;
            pivot -= b.transpose() * inv * b;
        }
        let sym = 0.5 * (&pivot + pivot.transpose());
        let eig = sym.clone().symmetric_eigen();
        for &ev in eig.eigenvalues.iter() {
            if ev < 0.0 {
                negative += 1;
                if first_negative.is_none() {
                    first_negative = Some((k, ev));
                }
            }
            if ev == 0.0 {
                return Err(Error::Singularity(format!("zero eigenvalue in pivot block {k}")));
            }
            log_det += ev.abs().ln();
        }
        prev = Some(sym);
    }
    Ok(HessianFactorization {
        log_det,
        negative,
        first_negative,
    })
}

/// `N Σ_m ln(2u(c_m)/Δσ)`, the log of the per-segment kinetic weights. Dividing
/// it out of each determinant is the midpoint covariant measure; without it
/// the ratio grows with the number of segments in any inhomogeneous medium.
fn log_measure(positions: &[Vec<f64>], s: f64, field: &dyn ScalarField) -> f64 {
    let m = positions.len() - 1;
    let h = s / m as f64;
    let n = positions[0].len() as f64;
    (0..m)
        .map(|k| {
            let (_, c) = segment(&positions[k], &positions[k + 1]);
            n * (2.0 * field.value(&c).powi(-2) / h).ln()
        })
        .sum()
}

/// `(det H_ray / det H_free)^{-1/2}`, each determinant taken relative to its
/// per-segment kinetic weights; a negative Hessian eigenvalue signals a
/// conjugate point and is returned as [`Error::Caustic`].
pub fn van_vleck_prefactor(ray: &RayPath, medium: &Medium) -> Result<f64> {
    let ray_f = factorize(&action_hessian(ray, medium))?;
    if let Some((index, eigenvalue)) = ray_f.first_negative {
        return Err(Error::Caustic { index, eigenvalue });
    }
    let chord_mid: Vec<f64> = ray.start().iter().zip(ray.end()).map(|(a, b)| 0.5 * (a + b)).collect();
    let c_ref = medium.velocity.checked_speed(&chord_mid)?;
    let free = Constant(c_ref);
    let free_f = factorize(&hessian_with(&ray.positions, ray.s, &free))?;
    let ray_log = ray_f.log_det - log_measure(&ray.positions, ray.s, medium.velocity.field());
    let free_log = free_f.log_det - log_measure(&ray.positions, ray.s, &free);
    Ok((-0.5 * (ray_log - free_log)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{make_standard_medium, ScenarioDescriptor};
    use crate::rays::{shoot_ray, two_point_ray};

    fn lens(amplitude: f64) -> Medium {
        let spec = ScenarioDescriptor::from_toml_str(&format!(
            "kind = \"gaussian-lens\"\nc0 = 1.0\namplitude = {amplitude}\ncenter = [0.5, 0.15, 0.0]\nwidth = 0.4\n"
        ))
        .unwrap();
        make_standard_medium(&spec).unwrap()
    }

    #[test]
    fn homogeneous_prefactor_is_one() {
        let m = Medium::homogeneous(3, 2.3);
        let ray = two_point_ray(&[1.0, 0.3, 0.0], &[0.0; 3], &m, 0.7, 64, 1e-12).unwrap();
        assert_eq!(van_vleck_prefactor(&ray, &m).unwrap(), 1.0);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let m = lens(0.3);
        let ray = two_point_ray(&[1.0, 0.0, 0.0], &[0.0; 3], &m, 1.0, 40, 1e-12).unwrap();
        let hm = action_hessian(&ray, &m);
        let n = 3;
        let nint = ray.steps() - 1;
        let delta = DVector::from_fn(nint * n, |i, _| 1e-6 * ((i as f64 * 0.731).sin()));
        let shifted = |sign: f64| {
            let mut moved = ray.positions.clone();
            for k in 0..nint {
                for j in 0..n {
                    moved[k + 1][j] += sign * delta[k * n + j];
                }
            }
            discrete_action_gradient(&moved, ray.s, &m)
        };
        let dg = (shifted(1.0) - shifted(-1.0)) * 0.5;
        let hd = hm.mul_vec(&delta);
        let err = (hd - dg).norm();
        assert!(err <= 1e-6 * delta.norm(), "mismatch {err:e} vs {:e}", delta.norm());
    }

    #[test]
    fn weak_lens_deviation_is_linear() {
        let dev = |a: f64| {
            let m = lens(a);
            let ray = two_point_ray(&[1.0, 0.0, 0.0], &[0.0; 3], &m, 1.0, 100, 1e-12).unwrap();
            (van_vleck_prefactor(&ray, &m).unwrap() - 1.0).abs()
        };
        let amps = [1e-3, 3e-3, 1e-2];
        let d: Vec<f64> = amps.iter().map(|&a| dev(a)).collect();
        let slope = crate::stats::loglog_slope(&amps, &d);
        assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn focusing_past_caustic_is_detected() {
        // A strong slow lens focuses a parallel bundle; a long ray through its
        // centre passes a conjugate point.
        let spec = ScenarioDescriptor::from_toml_str(
            "kind = \"gaussian-lens\"\nc0 = 1.0\namplitude = -0.6\ncenter = [0.0, 0.0, 0.0]\nwidth = 0.5\n",
        )
        .unwrap();
        let m = make_standard_medium(&spec).unwrap();
        let ray = shoot_ray(&[-4.0, 0.0, 0.0], &[8.0, 0.0, 0.0], &m, 1.0, 400).unwrap();
        assert!(matches!(van_vleck_prefactor(&ray, &m), Err(Error::Caustic { .. })));
    }
}

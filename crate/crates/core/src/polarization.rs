//! Proper-time ordered anisotropy factor and the factorized Green matrix.
//!
//! Along a path the polarization factor is the ordered exponential
//!
//! ```text
//! Φ = T exp(−iε ∫₀^s dσ A(σ)),   A_pq = γ_pmqn(r) ṙ^m ṙ^n / C0⁴(r)
//! ```
//!
//! realized as a product of per-segment exponentials with the earliest segment
//! rightmost. For symmetric `γ` every factor is unitary.
//!
//! The Green matrix is assembled from two separate proper-time integrals: the
//! scalar time × space kernel product, evaluated with the speed at the
//! two-point ray's midpoint, and the first-order polarization factor averaged
//! over `s` with the same regularizing weight `e^{−η/s − ηs}`. A constant
//! integrand makes the bare polarization integral diverge, so the weighted
//! average is used in its place.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::kernels::{free_time_kernel, space_kernel_with, Branch, Exponent, KernelConvention};
use crate::medium::Medium;
use crate::paths::{regularized_integral, DiscretePath, ProperTimeGrid};
use crate::rays::{two_point_ray, RayPath};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationFactor {
    pub matrix: DMatrix<Complex64>,
    pub epsilon: f64,
}

impl PolarizationFactor {
    pub fn identity(n: usize, epsilon: f64) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
            epsilon,
        }
    }
}

/// `A_pq = γ_pmqn(x) v^m v^n / C0⁴(x)`.
pub fn generator(medium: &Medium, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    let c = medium.velocity.checked_speed(x)?;
    Ok(medium.anisotropy.tensor_at(x).acoustic(v) / c.powi(4))
}

/// `exp(−i ε Δσ A)`.
pub fn segment_factor(a: &DMatrix<f64>, epsilon: f64, dsigma: f64) -> DMatrix<Complex64> {
    a.map(|v| Complex64::new(0.0, -epsilon * dsigma * v)).exp()
}

/// `Φ = E_{M−1} ⋯ E_1 E_0` with `E_m = exp(−iεA_mΔσ)` at segment midpoints.
pub fn ordered_anisotropy_factor(path: &DiscretePath, medium: &Medium) -> Result<PolarizationFactor> {
    let n = medium.dim;
    if path.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: path.dim(),
        });
    }
    if medium.epsilon == 0.0 || medium.anisotropy.is_zero() {
        return Ok(PolarizationFactor::identity(n, medium.epsilon));
    }
    let ds = path.dsigma();
    let mut phi = DMatrix::<Complex64>::identity(n, n);
    for m in 0..path.steps() {
        let a = generator(medium, &path.midpoint(m), &path.segment_velocity(m))?;
        phi = segment_factor(&a, medium.epsilon, ds) * phi;
    }
    Ok(PolarizationFactor {
        matrix: phi,
        epsilon: medium.epsilon,
    })
}

/// `∫₀^s dσ γ_imkn(R) Ṙ^m Ṙ^n / C0⁴(R)` by the trapezoid rule on the ray grid.
pub fn anisotropy_integral(ray: &RayPath, medium: &Medium) -> Result<DMatrix<f64>> {
    let n = medium.dim;
    let m = ray.steps();
    let h = ray.s / m as f64;
    let mut acc = DMatrix::zeros(n, n);
    if medium.anisotropy.is_zero() {
        return Ok(acc);
    }
    for i in 0..=m {
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        acc += generator(medium, &ray.positions[i], &ray.velocities[i])? * (w * h);
    }
    Ok(acc)
}

/// `δ_ik − iε ∫₀^s dσ γ_imkn Ṙ^m Ṙ^n / C0⁴` along the classical ray.
pub fn first_order_factor(ray: &RayPath, medium: &Medium) -> Result<PolarizationFactor> {
    let j = anisotropy_integral(ray, medium)?;
    let eps = medium.epsilon;
    let n = medium.dim;
    let matrix = DMatrix::from_fn(n, n, |i, k| {
        let d = if i == k { 1.0 } else { 0.0 };
        Complex64::new(d, -eps * j[(i, k)])
    });
    Ok(PolarizationFactor { matrix, epsilon: eps })
}

/// Overall scaling of the Green matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Multiply by `4π C_mid³` so that, for constant `C0` in three dimensions,
    /// the retarded shell integrates over time to `1/(2 C0² |x−x'|)`.
    #[default]
    HomogeneousLimit,
    /// The bare product of the two kernels.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GreenConfig {
    /// Full width at half maximum of the regularized shell, in units of the
    /// travel time `T = |x−x'|/C_mid`. Sets `η = reg_width·T/4`.
    pub reg_width: f64,
    /// `s_min = s_min_factor·T`.
    pub s_min_factor: f64,
    /// `s_max = s_max_factor·T`.
    pub s_max_factor: f64,
    pub n_nodes: usize,
    pub rel_tol: f64,
    pub ray_steps: usize,
    pub ray_tol: f64,
    /// Branch of the spatial kernel's `(4πis)^{-N/2}`; the time kernel always
    /// uses the principal branch.
    pub space_branch: Branch,
    pub normalization: Normalization,
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self {
            reg_width: 0.02,
            s_min_factor: 1e-4,
            s_max_factor: 1e3,
            n_nodes: 48,
            rel_tol: 1e-8,
            ray_steps: 200,
            ray_tol: 1e-10,
            space_branch: Branch::Conjugate,
            normalization: Normalization::HomogeneousLimit,
        }
    }
}

/// Everything about a source–receiver pair that does not depend on `t − t'`.
#[derive(Debug, Clone)]
pub struct FactorizedGreen {
    pub ray: RayPath,
    pub c_mid: f64,
    pub t_scale: f64,
    pub grid: ProperTimeGrid,
    pub polarization: DMatrix<Complex64>,
    x: Vec<f64>,
    xp: Vec<f64>,
    dim: usize,
    cfg: GreenConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenSample {
    pub tau: f64,
    /// `−i ∫ ds e^{−η/s−ηs} K_t K_x`
    pub scalar: Complex64,
    /// `Re(scalar · Φ̄_ik)` times the normalization.
    pub matrix: DMatrix<f64>,
}

impl FactorizedGreen {
    pub fn new(x: &[f64], xp: &[f64], medium: &Medium, cfg: &GreenConfig) -> Result<Self> {
        if !medium.is_lossless() {
            return Err(Error::Unsupported("factorized Green function needs a lossless medium".into()));
        }
        let r: f64 = x.iter().zip(xp).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::Singularity("source and receiver coincide".into()));
        }
        if cfg.normalization == Normalization::HomogeneousLimit && medium.dim != 3 {
            return Err(Error::Unsupported("homogeneous-limit normalization is defined for N = 3".into()));
        }
        // Rays at different s are reparametrizations of the s = 1 ray:
        // R_s(σ) = R_1(σ/s), so the polarization integral scales as 1/s.
        let ray = two_point_ray(x, xp, medium, 1.0, cfg.ray_steps, cfg.ray_tol)?;
        let c_mid = medium.velocity.checked_speed(&ray.positions[ray.steps() / 2])?;
        let t_scale = r / c_mid;
        let grid = ProperTimeGrid {
            s_min: cfg.s_min_factor * t_scale,
            s_max: cfg.s_max_factor * t_scale,
            n_nodes: cfg.n_nodes,
            eta: cfg.reg_width * t_scale / 4.0,
            rel_tol: cfg.rel_tol,
            max_panels: 20_000,
        };
        let n = medium.dim;
        let polarization = if medium.epsilon == 0.0 || medium.anisotropy.is_zero() {
            DMatrix::identity(n, n)
        } else {
            let j1 = crate::polarization::anisotropy_integral(&ray, medium)?;
            let norm = regularized_integral(|_| Complex64::new(1.0, 0.0), &grid)?.re;
            let inv_s = regularized_integral(|s| Complex64::new(1.0 / s, 0.0), &grid)?.re / norm;
            DMatrix::from_fn(n, n, |i, k| {
                let d = if i == k { 1.0 } else { 0.0 };
                Complex64::new(d, -medium.epsilon * j1[(i, k)] * inv_s)
            })
        };
        Ok(Self {
            ray,
            c_mid,
            t_scale,
            grid,
            polarization,
            x: x.to_vec(),
            xp: xp.to_vec(),
            dim: n,
            cfg: *cfg,
        })
    }

    pub fn normalization_factor(&self) -> f64 {
        match self.cfg.normalization {
            Normalization::HomogeneousLimit => 4.0 * PI * self.c_mid.powi(3),
            Normalization::Raw => 1.0,
        }
    }

    /// Scalar proper-time integral at `τ = t − t'`.
    pub fn scalar(&self, tau: f64) -> Result<Complex64> {
        let conv = KernelConvention {
            branch: self.cfg.space_branch,
            exponent: Exponent::Homogeneous,
        };
        let mut failure = None;
        let value = regularized_integral(
            |s| {
                let kt = free_time_kernel(tau, 0.0, s);
                let kx = space_kernel_with(&self.x, &self.xp, s, self.c_mid, self.dim, conv);
                match (kt, kx) {
                    (Ok(a), Ok(b)) => a * b,
                    (Err(e), _) | (_, Err(e)) => {
                        failure.get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                }
            },
            &self.grid,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(value * Complex64::new(0.0, -1.0))
    }

    pub fn at(&self, tau: f64) -> Result<GreenSample> {
        let scalar = self.scalar(tau)?;
        let f = self.normalization_factor();
        let matrix = self.polarization.map(|p| (scalar * p).re * f);
        Ok(GreenSample { tau, scalar, matrix })
    }
}

/// `Re{−i [∫ds K_t K_x] [⟨Φ⟩]}` at `(x, t)` for a source at `(x', t')`.
pub fn factorized_green(x: &[f64], xp: &[f64], t: f64, t_src: f64, medium: &Medium, cfg: &GreenConfig) -> Result<DMatrix<f64>> {
    Ok(FactorizedGreen::new(x, xp, medium, cfg)?.at(t - t_src)?.matrix)
}

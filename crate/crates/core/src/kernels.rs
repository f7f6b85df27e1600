//! Closed-form short-time kernels and the homogeneous retarded Green function.
//!
//! Half-integer powers of `4πis` default to the principal branch, so
//! `(4πis)^{N/2} = (4πs)^{N/2} e^{iNπ/4}` for `s > 0`. The spatial kernel
//! exponent defaults to `−(x−x')²/(4sC0²)`; the alternative that feeds the
//! quadratic form of [`geodesic_length_sq`] into `e^{iΔ²/4s}` carries an extra
//! factor 1/2 and is selectable through [`Exponent::Geodesic`].

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::medium::{Medium, VelocityField};
use crate::{Error, Result};

/// Branch of `(4πis)^{N/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Phase `e^{+iNπ/4}`.
    #[default]
    Principal,
    /// Phase `e^{−iNπ/4}`, the other sign of each `±(1±i)/√2` root.
    Conjugate,
}

/// Exponent of the spatial kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exponent {
    /// `−(x−x')² / (4 s C0²)`.
    #[default]
    Homogeneous,
    /// `Δ²/(4s)` with `Δ² = −(x−x')²/(2C0²)`.
    Geodesic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KernelConvention {
    pub branch: Branch,
    pub exponent: Exponent,
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("proper time s = {s} must be positive")))
    }
}

fn dist_sq(x: &[f64], xp: &[f64]) -> f64 {
    x.iter().zip(xp).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `(4πis)^{-n/2}` on the requested branch.
pub fn inverse_root(s: f64, n: usize, branch: Branch) -> Complex64 {
    let phase = match branch {
        Branch::Principal => -(n as f64) * FRAC_PI_4,
        Branch::Conjugate => (n as f64) * FRAC_PI_4,
    };
    Complex64::from_polar((4.0 * PI * s).powf(-(n as f64) / 2.0), phase)
}

/// `e^{i(t−t')²/(4s)} / √(4πis)`.
pub fn free_time_kernel(t: f64, t_src: f64, s: f64) -> Result<Complex64> {
    check_s(s)?;
    let tau = t - t_src;
    Ok(Complex64::from_polar(1.0, tau * tau / (4.0 * s)) * inverse_root(s, 1, Branch::Principal))
}

/// `C0^{-2N} e^{−i(x−x')²/(4sC0²)} / (4πis)^{N/2}` on the principal branch.
pub fn homogeneous_space_kernel(x: &[f64], xp: &[f64], s: f64, c0: f64, n: usize) -> Result<Complex64> {
    space_kernel_with(x, xp, s, c0, n, KernelConvention::default())
}

/// Spatial kernel under an explicit branch and exponent convention.
pub fn space_kernel_with(
    x: &[f64],
    xp: &[f64],
    s: f64,
    c0: f64,
    n: usize,
    conv: KernelConvention,
) -> Result<Complex64> {
    check_s(s)?;
    if !(c0 > 0.0) {
        return Err(Error::Domain(format!("C0 = {c0} must be positive")));
    }
    if x.len() != n || xp.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len().max(xp.len()),
        });
    }
    let r2 = dist_sq(x, xp);
    let phase = match conv.exponent {
        Exponent::Homogeneous => -r2 / (4.0 * s * c0 * c0),
        Exponent::Geodesic => -0.5 * r2 / (c0 * c0) / (4.0 * s),
    };
    Ok(Complex64::from_polar(c0.powi(-2 * n as i32), phase) * inverse_root(s, n, conv.branch))
}

/// `Δ²(x, x') = −½ (x−x')² / C0²((x+x')/2)`.
///
/// This is the quadratic small-separation form; terms of order `(x−x')⁴` in
/// the true travel functional are dropped.
pub fn geodesic_length_sq(x: &[f64], xp: &[f64], velocity: &VelocityField) -> f64 {
    let mid: Vec<f64> = x.iter().zip(xp).map(|(a, b)| 0.5 * (a + b)).collect();
    let c = velocity.speed(&mid);
    -0.5 * dist_sq(x, xp) / (c * c)
}

/// Short-time amplitude matrix with its scalar prefactor and bracket kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortTimeMatrix {
    pub s: f64,
    /// `(C0²(x))^{-N/2} e^{−i(x−x')²/(2sC0²(x))}`
    pub prefactor: Complex64,
    /// `δ_ik − i s ε C0^{-4}(x) γ_iukv(x) (Δ/s)_u (Δ/s)_v`
    pub bracket: DMatrix<Complex64>,
}

impl ShortTimeMatrix {
    pub fn matrix(&self) -> DMatrix<Complex64> {
        self.bracket.map(|v| v * self.prefactor)
    }
}

pub fn short_time_amplitude(x: &[f64], xp: &[f64], s: f64, medium: &Medium) -> Result<ShortTimeMatrix> {
    check_s(s)?;
    medium.check_point(x)?;
    let n = medium.dim;
    let c = medium.velocity.checked_speed(x)?;
    let c2 = c * c;
    let r2 = dist_sq(x, xp);
    let prefactor = Complex64::from_polar(c2.powf(-(n as f64) / 2.0), -r2 / (2.0 * s * c2));
    let mut bracket = DMatrix::<Complex64>::identity(n, n);
    if medium.epsilon != 0.0 {
        let v: Vec<f64> = x.iter().zip(xp).map(|(a, b)| (a - b) / s).collect();
        let g = medium.anisotropy.tensor_at(x).acoustic(&v);
        let coef = s * medium.epsilon / (c2 * c2);
        for i in 0..n {
            for k in 0..n {
                bracket[(i, k)] -= Complex64::new(0.0, coef * g[(i, k)]);
            }
        }
    }
    Ok(ShortTimeMatrix { s, prefactor, bracket })
}

/// Unit-area Gaussian of standard deviation `width`.
#[inline]
pub fn gaussian_delta(u: f64, width: f64) -> f64 {
    (-(u * u) / (2.0 * width * width)).exp() / (width * (2.0 * PI).sqrt())
}

/// `½ δ_reg(C0|t−t'| − |x−x'|) / (C0|x−x'|)` with `δ_reg` a unit-area Gaussian of
/// standard deviation `reg_width·C0` in its argument. Only the retarded shell
/// (`t > t'`) is kept.
pub fn retarded_green_homogeneous(
    x: &[f64],
    xp: &[f64],
    t: f64,
    t_src: f64,
    c0: f64,
    reg_width: f64,
) -> Result<f64> {
    let r = dist_sq(x, xp).sqrt();
    if r == 0.0 {
        return Err(Error::Singularity("source and receiver coincide".into()));
    }
    if !(reg_width > 0.0) {
        return Err(Error::Domain(format!("regularization width {reg_width} must be positive")));
    }
    let tau = t - t_src;
    if tau < 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * gaussian_delta(c0 * tau - r, reg_width * c0) / (c0 * r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_kernel_modulus_and_phase() {
        let k = free_time_kernel(0.0, 0.0, 1.0).unwrap();
        assert!((k.norm() - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
        let k2 = free_time_kernel(2.0, 0.0, 1.0).unwrap();
        assert!((k2.norm() - k.norm()).abs() < 1e-15);
        // Numerator phase 1, root phase -π/4.
        assert!((k2.arg() - (1.0 - FRAC_PI_4)).abs() < 1e-14);
        assert!(free_time_kernel(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn space_kernel_at_coincidence() {
        let k = homogeneous_space_kernel(&[0.0; 3], &[0.0; 3], 1.0, 1.0, 3).unwrap();
        let expect = Complex64::new(0.0, 4.0 * PI).powf(-1.5);
        assert!((k - expect).norm() < 1e-15);
        let k2 = homogeneous_space_kernel(&[0.0; 3], &[0.0; 3], 1.0, 2.0, 3).unwrap();
        assert!((k2.norm() / k.norm() - 2f64.powi(-6)).abs() < 1e-15);
    }

    #[test]
    fn geodesic_examples() {
        let v = VelocityField::homogeneous(3, 2.0);
        assert_eq!(geodesic_length_sq(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &v), 0.0);
        assert!((geodesic_length_sq(&[2.0, 0.0, 0.0], &[0.0; 3], &v) + 0.5).abs() < 1e-15);
        let lin = VelocityField::new(
            3,
            crate::medium::field::Linear {
                base: 1.0,
                slope: 0.1,
                axis: 0,
            },
        );
        let got = geodesic_length_sq(&[1.0, 0.0, 0.0], &[0.0; 3], &lin);
        assert!((got + 0.5 / 1.05f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn short_time_correction_entry() {
        use crate::medium::{AnisotropyField, Tensor4};
        let g = Tensor4::from_entries_symmetrized(3, &[([0, 0, 0, 0], 1.0)]);
        let m = Medium::homogeneous(3, 1.0).with_anisotropy(AnisotropyField::Constant(g), 0.1);
        let (d, s) = (0.3, 0.7);
        let a = short_time_amplitude(&[d, 0.0, 0.0], &[0.0; 3], s, &m).unwrap();
        let corr = a.bracket[(0, 0)] - Complex64::new(1.0, 0.0);
        assert!((corr - Complex64::new(0.0, -0.1 * d * d / s)).norm() < 1e-15);
        for (i, k) in [(1, 1), (2, 2), (0, 1)] {
            assert_eq!(a.bracket[(i, k)], if i == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        }
    }

    #[test]
    fn retarded_green_tail_and_coincidence() {
        let x = [1.0, 0.0, 0.0];
        let far = retarded_green_homogeneous(&x, &[0.0; 3], 1.0 + 11.0 * 0.02, 0.0, 1.0, 0.02).unwrap();
        assert!(far < 1e-10);
        assert!(retarded_green_homogeneous(&x, &x, 1.0, 0.0, 1.0, 0.02).is_err());
    }
}

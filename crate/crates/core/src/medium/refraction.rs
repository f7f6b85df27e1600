//! Refraction-index split `1/n² = 1/n0² + ε/n1²`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::field::ScalarField;

/// One Fourier coefficient `Ṽ(k)` of the perturbation `1/n1²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMode {
    pub k: Vec<f64>,
    pub value: Complex64,
}

/// `(2π)^{-3/2}`, the inverse-transform normalization used throughout.
pub fn fourier_norm() -> f64 {
    (2.0 * PI).powf(-1.5)
}

/// Real part of `(2π)^{-3/2} Σ_j Ṽ(k_j) e^{i k_j·x}`.
pub fn fourier_sum(modes: &[FourierMode], x: &[f64]) -> f64 {
    fourier_sum_complex(modes, x).re
}

pub fn fourier_sum_complex(modes: &[FourierMode], x: &[f64]) -> Complex64 {
    let acc: Complex64 = modes
        .iter()
        .map(|m| {
            let phase: f64 = m.k.iter().zip(x).map(|(k, v)| k * v).sum();
            m.value * Complex64::from_polar(1.0, phase)
        })
        .sum();
    acc * fourier_norm()
}

/// Representation of the perturbing index `n1`.
#[derive(Debug, Clone)]
pub enum Perturbation {
    /// `n1 → ∞`: no perturbation.
    None,
    /// Pointwise `n1(x) > 0`.
    Index(Arc<dyn ScalarField>),
    /// `1/n1²` given by its Fourier coefficients.
    Fourier(Vec<FourierMode>),
}

#[derive(Debug, Clone)]
pub struct RefractionDecomposition {
    pub n0: Arc<dyn ScalarField>,
    pub n1: Perturbation,
    pub epsilon: f64,
}

impl RefractionDecomposition {
    pub fn new(n0: impl ScalarField + 'static, n1: Perturbation, epsilon: f64) -> Self {
        Self {
            n0: Arc::new(n0),
            n1,
            epsilon,
        }
    }

    /// `1/n1²(x)`.
    pub fn perturbation_inv_sq(&self, x: &[f64]) -> f64 {
        match &self.n1 {
            Perturbation::None => 0.0,
            Perturbation::Index(f) => {
                let v = f.value(x);
                1.0 / (v * v)
            }
            Perturbation::Fourier(modes) => fourier_sum(modes, x),
        }
    }
}

/// `1/n0²(x) + ε/n1²(x)`.
pub fn refraction_inv_sq(decomp: &RefractionDecomposition, x: &[f64]) -> f64 {
    let n0 = decomp.n0.value(x);
    let base = 1.0 / (n0 * n0);
    if decomp.epsilon == 0.0 {
        return base;
    }
    base + decomp.epsilon * decomp.perturbation_inv_sq(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::field::Constant;

    #[test]
    fn unperturbed() {
        let d = RefractionDecomposition::new(Constant(1.0), Perturbation::None, 0.0);
        assert_eq!(refraction_inv_sq(&d, &[0.4, 1.0, 2.0]), 1.0);
    }

    #[test]
    fn constant_perturbation() {
        let d = RefractionDecomposition::new(Constant(1.0), Perturbation::Index(Arc::new(Constant(2.0))), 0.01);
        assert!((refraction_inv_sq(&d, &[0.0; 3]) - 1.0025).abs() < 1e-15);
    }

    #[test]
    fn conjugate_pair_at_zero_phase() {
        let v = Complex64::new(0.3, 0.0);
        let modes = vec![
            FourierMode { k: vec![1.0, 2.0, 0.0], value: v },
            FourierMode { k: vec![-1.0, -2.0, 0.0], value: v.conj() },
        ];
        // k·x = 0 at x = (2, -1, 5).
        let got = fourier_sum(&modes, &[2.0, -1.0, 5.0]);
        assert!((got - 2.0 * 0.3 / (2.0 * PI).powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn linear_in_epsilon() {
        let n1 = Perturbation::Index(Arc::new(Constant(1.7)));
        let f = |e: f64| refraction_inv_sq(&RefractionDecomposition::new(Constant(1.3), n1.clone(), e), &[0.0; 3]);
        assert!((f(0.2) + f(0.05) - f(0.0) - f(0.25)).abs() < 1e-12);
    }
}

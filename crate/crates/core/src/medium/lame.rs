//! Isotropic elastic medium described by density and Lamé parameters.

use std::sync::Arc;

use super::field::ScalarField;
use super::tensor::{kron, Tensor4};
use crate::{Error, Result};

/// Density `ρ(x)` and Lamé parameters `λ(x)`, `μ(x)`.
///
/// Gradients come from each field's own `gradient`, which is analytic for the
/// builtin profiles and a central difference otherwise.
#[derive(Debug, Clone)]
pub struct LameMedium {
    pub dim: usize,
    pub density: Arc<dyn ScalarField>,
    pub lambda: Arc<dyn ScalarField>,
    pub mu: Arc<dyn ScalarField>,
}

/// Rank-3 tensor `D_ikl`, row-major over `(i, k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize, l: usize) -> f64 {
        self.data[(i * self.n + k) * self.n + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, l: usize, v: f64) {
        self.data[(i * self.n + k) * self.n + l] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }
}

impl LameMedium {
    pub fn new(
        dim: usize,
        density: impl ScalarField + 'static,
        lambda: impl ScalarField + 'static,
        mu: impl ScalarField + 'static,
    ) -> Self {
        Self {
            dim,
            density: Arc::new(density),
            lambda: Arc::new(lambda),
            mu: Arc::new(mu),
        }
    }
}

/// Returns `(Λ_ijkl, D_ikl)` with
///
/// ```text
/// Λ_ijkl = δ_ij δ_lk λ/ρ + δ_il δ_jk μ/ρ + δ_jl δ_ik μ/ρ
/// D_ikl  = δ_lk ∂_iλ/ρ + δ_li ∂_kμ/ρ + δ_ik ∂_lμ/ρ
/// ```
pub fn lame_tensors_at(lm: &LameMedium, x: &[f64]) -> Result<(Tensor4, Tensor3)> {
    let n = lm.dim;
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    let rho = lm.density.value(x);
    if !(rho > 0.0) {
        return Err(Error::InvalidMedium(format!("density {rho} at {x:?} is not positive")));
    }
    let mu = lm.mu.value(x);
    if mu < 0.0 {
        return Err(Error::InvalidMedium(format!("shear modulus {mu} at {x:?} is negative")));
    }
    let lam = lm.lambda.value(x) / rho;
    let mur = mu / rho;
    let glam = lm.lambda.gradient(x);
    let gmu = lm.mu.gradient(x);

    let mut big = Tensor4::zeros(n);
    let mut d = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = kron(i, j) * kron(l, k) * lam
                        + kron(i, l) * kron(j, k) * mur
                        + kron(j, l) * kron(i, k) * mur;
                    big.set(i, j, k, l, v);
                }
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                let v = kron(l, k) * glam[i] / rho
                    + kron(l, i) * gmu[k] / rho
                    + kron(i, k) * gmu[l] / rho;
                d.set(i, k, l, v);
            }
        }
    }
    Ok((big, d))
}

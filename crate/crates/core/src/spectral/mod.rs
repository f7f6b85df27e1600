//! Reference solver in a box with Dirichlet walls.
//!
//! Fields are expanded in the Laplacian eigenfunctions
//! `φ_n(x) = ∏_d √(2/L_d) sin(n_d π x_d / L_d)` with `λ_n = −Σ_d (n_d π/L_d)²`,
//! and the wave equation becomes a linear ODE system for the coefficients.
//! Box coordinates run over `[0, L_d]` on every axis.

mod green;
mod system;

pub use green::{spectral_green, spectral_green_with, time_integral, SpectralGreen, SpectralGreenOptions};
pub use system::{evolve, DampingMatrix, SpectralState, SpectralSystem, Stiffness};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lengths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::config("box.lengths", "need at least one side length"));
        }
        if let Some(l) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::config("box.lengths", format!("side length {l} must be positive")));
        }
        Ok(Self { lengths })
    }

    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Self::new(vec![side; dim])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lengths.iter().map(|l| 0.5 * l).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Strictly inside on every axis.
    pub fn is_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lengths).all(|(v, l)| *v > 0.0 && v < l)
    }
}

/// `√(2/L) sin(nπx/L)`
pub fn sine_mode(n: usize, l: f64, x: f64) -> f64 {
    (2.0 / l).sqrt() * (n as f64 * PI * x / l).sin()
}

/// First derivative of [`sine_mode`].
pub fn sine_mode_d1(n: usize, l: f64, x: f64) -> f64 {
    let k = n as f64 * PI / l;
    (2.0 / l).sqrt() * k * (k * x).cos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    pub domain: BoxDomain,
    pub m_cut: f64,
    /// Mode multi-indices, ordered by `|λ|` then lexicographically.
    pub modes: Vec<Vec<usize>>,
    pub eigenvalues: Vec<f64>,
}

/// Every tensor-product sine mode with `|λ_n| ≤ M_cut`.
pub fn dirichlet_eigenbasis(domain: &BoxDomain, m_cut: f64) -> Result<SpectralBasis> {
    let lam1: f64 = domain.lengths.iter().map(|l| (PI / l).powi(2)).sum();
    if !(m_cut >= lam1) {
        return Err(Error::config(
            "m_cut",
            format!("cutoff {m_cut} is below the first eigenvalue magnitude {lam1}"),
        ));
    }
    let n = domain.dim();
    let max_idx: Vec<usize> = domain
        .lengths
        .iter()
        .map(|l| (l * m_cut.sqrt() / PI).floor() as usize)
        .collect();
    let mut modes = Vec::new();
    let mut idx = vec![1usize; n];
    'outer: loop {
        let lam: f64 = idx
            .iter()
            .zip(&domain.lengths)
            .map(|(&k, l)| (k as f64 * PI / l).powi(2))
            .sum();
        if lam <= m_cut {
            modes.push((lam, idx.clone()));
        }
        for d in (0..n).rev() {
            if idx[d] < max_idx[d] {
                idx[d] += 1;
                continue 'outer;
            }
            idx[d] = 1;
        }
        break;
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(SpectralBasis {
        domain: domain.clone(),
        m_cut,
        eigenvalues: modes.iter().map(|m| -m.0).collect(),
        modes: modes.into_iter().map(|m| m.1).collect(),
    })
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Largest mode index along `axis`.
    pub fn max_index(&self, axis: usize) -> usize {
        self.modes.iter().map(|m| m[axis]).max().unwrap_or(0)
    }

    pub fn lambda_max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, l| a.max(l.abs()))
    }

    pub fn phi(&self, mode: usize, x: &[f64]) -> f64 {
        self.modes[mode]
            .iter()
            .zip(&self.domain.lengths)
            .zip(x)
            .map(|((&n, &l), &xd)| sine_mode(n, l, xd))
            .product()
    }

    /// `φ_n(x)` for every mode, reusing per-axis sines.
    pub fn phi_all(&self, x: &[f64]) -> Vec<f64> {
        let tables = self.axis_tables(x, sine_mode);
        self.modes
            .iter()
            .map(|m| m.iter().enumerate().map(|(d, &k)| tables[d][k]).product())
            .collect()
    }

    pub(crate) fn axis_tables(&self, x: &[f64], f: fn(usize, f64, f64) -> f64) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|d| {
                let l = self.domain.lengths[d];
                (0..=self.max_index(d)).map(|k| f(k, l, x[d])).collect()
            })
            .collect()
    }

    /// `Σ_n c_n φ_n(x)`
    pub fn evaluate(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        self.phi_all(x).iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    /// `∫_box φ_n`
    pub fn mode_integral(&self, mode: usize) -> f64 {
        self.modes[mode]
            .iter()
            .zip(&self.domain.lengths)
            .map(|(&n, &l)| {
                if n % 2 == 0 {
                    0.0
                } else {
                    (2.0 / l).sqrt() * 2.0 * l / (n as f64 * PI)
                }
            })
            .product()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Tensor-product Gauss–Legendre grid over the box.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorGrid {
    pub fn new(domain: &BoxDomain, orders: &[usize]) -> Self {
        let rules: Vec<(Vec<f64>, Vec<f64>)> = domain
            .lengths
            .iter()
            .zip(orders)
            .map(|(&l, &q)| {
                let (x, w) = gauss_legendre(q);
                (
                    x.iter().map(|t| 0.5 * l * (t + 1.0)).collect(),
                    w.iter().map(|v| 0.5 * l * v).collect(),
                )
            })
            .collect();
        let n = rules.len();
        let total: usize = orders.iter().product();
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            points.push((0..n).map(|d| rules[d].0[idx[d]]).collect());
            weights.push((0..n).map(|d| rules[d].1[idx[d]]).product());
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < orders[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self { points, weights }
    }

    /// `⌈π·max_index⌉ + extra` points per axis, enough to resolve products
    /// of two basis functions with a smooth factor to round-off once
    /// `extra ≳ 10`.
    pub fn for_basis(basis: &SpectralBasis, extra: usize) -> Self {
        let orders: Vec<usize> = (0..basis.dim())
            .map(|d| (std::f64::consts::PI * basis.max_index(d) as f64).ceil() as usize + extra)
            .collect();
        Self::new(&basis.domain, &orders)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Galerkin coefficients of a (vector) field, one row per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedField {
    /// `coeffs[n][i] = ⟨φ_n, f_i⟩`
    pub coeffs: Vec<Vec<f64>>,
    /// `‖f − Σ c_n φ_n‖ / ‖f‖` on the quadrature grid, `0` for `f = 0`.
    pub reconstruction_error: f64,
}

impl ProjectedField {
    /// Coefficients of component `i`.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.coeffs.iter().map(|c| c[i]).collect()
    }
}

/// Projects an `n_comp`-component field with the tensor Gauss rule of
/// [`TensorGrid::for_basis`].
pub fn project_field(
    f: impl Fn(&[f64]) -> Vec<f64>,
    n_comp: usize,
    basis: &SpectralBasis,
    extra: usize,
) -> ProjectedField {
    let grid = TensorGrid::for_basis(basis, extra);
    let p = basis.len();
    let mut coeffs = vec![vec![0.0; n_comp]; p];
    let mut samples = Vec::with_capacity(grid.len());
    let mut phis = Vec::with_capacity(grid.len());
    for (x, &w) in grid.points.iter().zip(&grid.weights) {
        let fx = f(x);
        let ph = basis.phi_all(x);
        for n in 0..p {
            for i in 0..n_comp {
                coeffs[n][i] += w * ph[n] * fx[i];
            }
        }
        samples.push(fx);
        phis.push(ph);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((fx, ph), &w) in samples.iter().zip(&phis).zip(&grid.weights) {
        for i in 0..n_comp {
            let rec: f64 = (0..p).map(|n| coeffs[n][i] * ph[n]).sum();
            num += w * (fx[i] - rec).powi(2);
            den += w * fx[i] * fx[i];
        }
    }
    let reconstruction_error = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    ProjectedField {
        coeffs,
        reconstruction_error,
    }
}

/// Weights `φ_n(x̄)` of the truncated point source.
pub fn delta_source_coeffs(x_bar: &[f64], basis: &SpectralBasis) -> Result<Vec<f64>> {
    if x_bar.len() != basis.dim() {
        return Err(Error::Dimension {
            expected: basis.dim(),
            got: x_bar.len(),
        });
    }
    let on_wall = x_bar
        .iter()
        .zip(&basis.domain.lengths)
        .any(|(v, l)| *v <= 0.0 || *v >= *l);
    if on_wall {
        return Err(Error::DegenerateSource {
            position: x_bar.to_vec(),
        });
    }
    Ok(basis.phi_all(x_bar))
}

/// `∫_box δ_M(x − x̄) dx = Σ_n φ_n(x̄) ∫φ_n`.
pub fn delta_integral(weights: &[f64], basis: &SpectralBasis) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(n, w)| w * basis.mode_integral(n))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize) -> BoxDomain {
        BoxDomain::cube(dim, 1.0).unwrap()
    }

    #[test]
    fn first_eigenvalue_unit_interval() {
        let b = dirichlet_eigenbasis(&unit(1), 10.0).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b.eigenvalues[0] + PI * PI).abs() < 1e-12);
        assert!((b.eigenvalues[0] + 9.8696).abs() < 1e-4);
    }

    #[test]
    fn cutoff_below_first_eigenvalue_is_rejected() {
        assert!(dirichlet_eigenbasis(&unit(3), 20.0).is_err());
    }

    #[test]
    fn unit_cube_mode_counts() {
        // n1²+n2²+n3² ≤ 40/π² ≈ 4.05 admits only (1,1,1).
        let b = dirichlet_eigenbasis(&unit(3), 40.0).unwrap();
        assert_eq!(b.modes, vec![vec![1, 1, 1]]);
        // Raising the cutoff past 6π² adds the three permutations of (2,1,1).
        let b = dirichlet_eigenbasis(&unit(3), 6.0 * PI * PI + 1e-9).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.modes[1..], [vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1]]);
    }

    #[test]
    fn eigenfunctions_satisfy_laplace_and_vanish_on_walls() {
        let d = BoxDomain::new(vec![1.0, 2.0]).unwrap();
        let b = dirichlet_eigenbasis(&d, 60.0).unwrap();
        let x = [0.3, 0.7];
        let h = 1e-4;
        for m in 0..b.len() {
            let mut lap = 0.0;
            for ax in 0..2 {
                let mut p = x;
                p[ax] += h;
                let mut q = x;
                q[ax] -= h;
                lap += (b.phi(m, &p) - 2.0 * b.phi(m, &x) + b.phi(m, &q)) / (h * h);
            }
            assert!((lap - b.eigenvalues[m] * b.phi(m, &x)).abs() < 1e-4 * b.eigenvalues[m].abs());
            assert!(b.phi(m, &[0.0, 0.4]).abs() < 1e-14);
            assert!(b.phi(m, &[0.4, 2.0]).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 12, 33] {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn modes_are_orthonormal_under_quadrature() {
        let d = BoxDomain::new(vec![1.0, 1.5, 0.8]).unwrap();
        let b = dirichlet_eigenbasis(&d, 150.0).unwrap();
        let g = TensorGrid::for_basis(&b, 12);
        let p = b.len();
        let mut gram = vec![0.0; p * p];
        for (x, w) in g.points.iter().zip(&g.weights) {
            let ph = b.phi_all(x);
            for i in 0..p {
                for j in 0..p {
                    gram[i * p + j] += w * ph[i] * ph[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..p {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * p + j] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projecting_a_mode_returns_a_unit_vector() {
        let b = dirichlet_eigenbasis(&unit(2), 130.0).unwrap();
        let bb = b.clone();
        let pf = project_field(move |x| vec![bb.phi(2, x)], 1, &b, 12);
        for (n, c) in pf.coeffs.iter().enumerate() {
            let e = if n == 2 { 1.0 } else { 0.0 };
            assert!((c[0] - e).abs() < 1e-10);
        }
        assert!(pf.reconstruction_error < 1e-10);
    }

    #[test]
    fn projecting_zero_gives_zero() {
        let b = dirichlet_eigenbasis(&unit(3), 100.0).unwrap();
        let pf = project_field(|_| vec![0.0; 3], 3, &b, 12);
        assert!(pf.coeffs.iter().flatten().all(|c| *c == 0.0));
        assert_eq!(pf.reconstruction_error, 0.0);
    }

    #[test]
    fn product_of_sines_projects_onto_the_ground_mode() {
        // ∫ sin(πx)sin(πy)sin(πz) · 2^{3/2} sin(πx)sin(πy)sin(πz) = 2^{3/2}/8.
        let b = dirichlet_eigenbasis(&unit(3), 40.0).unwrap();
        let f = |x: &[f64]| vec![x.iter().map(|v| (PI * v).sin()).product()];
        let pf = project_field(f, 1, &b, 12);
        assert!((pf.coeffs[0][0] - 2f64.powf(-1.5)).abs() < 1e-12);
    }

    #[test]
    fn centered_source_has_no_even_modes() {
        let b = dirichlet_eigenbasis(&unit(1), 200.0 * 200.0).unwrap();
        let w = delta_source_coeffs(&[0.5], &b).unwrap();
        for (m, wn) in b.modes.iter().zip(&w) {
            let n = m[0];
            if n % 2 == 0 {
                assert!(wn.abs() < 1e-12);
            } else {
                assert!((wn - 2f64.sqrt() * (n as f64 * PI / 2.0).sin()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_delta_integrates_to_one() {
        let d = unit(1);
        let mut errs = Vec::new();
        for n_modes in [25.0, 100.0, 400.0] {
            let b = dirichlet_eigenbasis(&d, (n_modes * PI).powi(2) + 1e-6).unwrap();
            let w = delta_source_coeffs(&[0.37], &b).unwrap();
            errs.push((delta_integral(&w, &b) - 1.0).abs());
        }
        assert!(errs[2] < 0.05);
        assert!(errs[2] < errs[0]);
    }

    #[test]
    fn source_on_wall_is_degenerate() {
        let b = dirichlet_eigenbasis(&unit(2), 100.0).unwrap();
        assert!(matches!(
            delta_source_coeffs(&[0.0, 0.5], &b),
            Err(Error::DegenerateSource { .. })
        ));
    }
}

//! First-Born scattering tomography for a scalar field of frequency `w̄`.
//!
//! The inverse squared perturbing index is written as a truncated Fourier sum
//!
//! ```text
//! 1/n1²(r) = (2π)^{-3/2} Σ_j Ṽ(k_j) e^{i k_j·r}
//! ```
//!
//! over `2N+1 = (2k+1)²` wavevectors, and the scattered field sampled at every
//! source–receiver pair of the survey is linear in the coefficients `Ṽ`. Rows
//! of the coefficient matrix are ordered with the receiver index `p` outer and
//! the source index `q` inner.

mod forward;
mod inverse;

pub use forward::{
    born_scattered_field, born_scattered_field_mc, coefficient_entry, coefficient_matrix, euclidean_bridge_average,
    BornMcConfig, BornMethod, CoefficientMatrix, McBorn, PairPropagator,
};
pub use inverse::{
    assemble_and_invert, conjugate_symmetrize, l_curve, l_curve_corner, leave_one_out, omega_sweep, solve_normal_equations,
    LCurvePoint, NormalSolution, TomographySystem,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::medium::refraction::fourier_norm;
use crate::paths::ProperTimeGrid;
use crate::{Error, Result};

/// Sign conventions of the proper-time weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// `e^{i a S}`, `(4πiS/b)^{-3/2}`, `e^{i b S_cl/4}`.
    #[default]
    Oscillatory,
    /// `e^{−a S}`, `(4πS/b)^{-3/2}`, `e^{−b S_cl/4}`: every factor except
    /// `e^{ik·r}` is real.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TomographyConfig {
    /// `w̄`
    pub frequency: f64,
    /// Background speed `C`.
    pub speed: f64,
    /// Schulman scale `B`.
    pub schulman_b: f64,
    pub epsilon: f64,
    /// Tikhonov weight `ω_reg ≥ 0`.
    pub omega_reg: f64,
    pub phase: PhaseConvention,
    /// Outer proper-time window and regularization.
    pub proper_time: ProperTimeGrid,
    pub ray_steps: usize,
    pub ray_tol: f64,
    /// Multiply each pair propagator by its Van Vleck prefactor.
    pub van_vleck: bool,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            frequency: 1.0,
            speed: 1.0,
            schulman_b: 1.0,
            epsilon: 0.01,
            omega_reg: 0.0,
            phase: PhaseConvention::Oscillatory,
            proper_time: ProperTimeGrid::new(1e-3, 1e2, 48, 1e-2),
            ray_steps: 64,
            ray_tol: 1e-10,
            van_vleck: false,
        }
    }
}

impl TomographyConfig {
    /// `a = w̄²/C²`
    pub fn a(&self) -> f64 {
        (self.frequency / self.speed).powi(2)
    }

    /// `b = C²B²/w̄²`
    pub fn b(&self) -> f64 {
        (self.speed * self.schulman_b / self.frequency).powi(2)
    }

    /// `κ = ε b`
    pub fn kappa(&self) -> f64 {
        self.epsilon * self.b()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("frequency", self.frequency),
            ("speed", self.speed),
            ("schulman_b", self.schulman_b),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("{v} must be positive")));
            }
        }
        if !(self.epsilon >= 0.0) || !self.kappa().is_finite() {
            return Err(Error::config("epsilon", "ε must be >= 0 with ε·C²B²/w̄² finite"));
        }
        if !(self.omega_reg >= 0.0) {
            return Err(Error::config("omega_reg", "must be >= 0"));
        }
        if self.ray_steps < 2 {
            return Err(Error::config("ray_steps", "need at least 2"));
        }
        Ok(())
    }
}

/// Sources `x^(s)_q` and receivers `x^(r)_p`, `2k+1` of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyGeometry {
    pub k: usize,
    pub sources: Vec<Vec<f64>>,
    pub receivers: Vec<Vec<f64>>,
}

impl SurveyGeometry {
    pub fn new(k: usize, sources: Vec<Vec<f64>>, receivers: Vec<Vec<f64>>) -> Result<Self> {
        if k < 1 {
            return Err(Error::config("k", "must be >= 1"));
        }
        let n = 2 * k + 1;
        if sources.len() != n || receivers.len() != n {
            return Err(Error::config(
                "geometry",
                format!("need {n} sources and {n} receivers, got {} and {}", sources.len(), receivers.len()),
            ));
        }
        for (name, set) in [("sources", &sources), ("receivers", &receivers)] {
            if set.iter().any(|x| x.len() != 3) {
                return Err(Error::config(name, "positions must be three-dimensional"));
            }
            for i in 0..n {
                for j in 0..i {
                    if set[i] == set[j] {
                        return Err(Error::config(name, format!("positions {j} and {i} coincide")));
                    }
                }
            }
        }
        Ok(Self { k, sources, receivers })
    }

    /// Sources near the plane `x = 0` and receivers near `x = offset`, on
    /// bent, off-center wells so that the layout has no mirror symmetry.
    pub fn crosswell(k: usize, offset: f64, aperture: f64) -> Result<Self> {
        let n = 2 * k + 1;
        let t = |i: usize| i as f64 / (n - 1) as f64 - 0.5;
        let sources = (0..n)
            .map(|q| {
                let s = t(q);
                vec![0.15 * aperture * s * s, aperture * (s + 0.11), aperture * (0.35 * s + 0.6 * s * s)]
            })
            .collect();
        let receivers = (0..n)
            .map(|p| {
                let s = t(p);
                vec![offset - 0.1 * aperture * s, aperture * (0.4 * s * s - 0.3 * s - 0.07), aperture * (s - 0.5 * s * s + 0.05)]
            })
            .collect();
        Self::new(k, sources, receivers)
    }

    pub fn n_side(&self) -> usize {
        2 * self.k + 1
    }

    /// `(p, q)` pairs in row order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_side();
        (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).collect()
    }
}

/// `k_{−N}, …, k_0 = 0, …, k_N` stored at positions `0..2N+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveNumberSet {
    pub k: usize,
    pub k_max: f64,
    pub n: usize,
    pub vectors: Vec<[f64; 3]>,
}

impl WaveNumberSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Wavevector `k_j`, `−N ≤ j ≤ N`.
    pub fn get(&self, j: isize) -> [f64; 3] {
        self.vectors[(j + self.n as isize) as usize]
    }

    /// Storage position of `k_{−j}` given that of `k_j`.
    pub fn partner(&self, pos: usize) -> usize {
        2 * self.n - pos
    }
}

/// Deterministic conjugate-symmetric lattice: the `2N+1` shortest vectors of
/// the cubic lattice of spacing `k_max/(k+1)`, ties broken lexicographically.
pub fn wavenumber_set(k: usize, k_max: f64) -> Result<WaveNumberSet> {
    if k < 1 {
        return Err(Error::config("k", "must be >= 1"));
    }
    if !(k_max > 0.0) {
        return Err(Error::config("k_max", "must be positive"));
    }
    let n = 2 * k * (k + 1);
    let h = k_max / (k + 1) as f64;
    let r = (k + 1) as i64;
    let mut half: Vec<[i64; 3]> = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                let v = [a, b, c];
                let first = v.iter().find(|x| **x != 0);
                if matches!(first, Some(x) if *x > 0) && a * a + b * b + c * c <= r * r {
                    half.push(v);
                }
            }
        }
    }
    half.sort_by_key(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2], *v));
    if half.len() < n {
        return Err(Error::config("k", "lattice too small"));
    }
    half.truncate(n);
    let to_f = |v: &[i64; 3], s: f64| [s * v[0] as f64 * h, s * v[1] as f64 * h, s * v[2] as f64 * h];
    let mut vectors: Vec<[f64; 3]> = half.iter().rev().map(|v| to_f(v, -1.0)).collect();
    vectors.push([0.0; 3]);
    vectors.extend(half.iter().map(|v| to_f(v, 1.0)));
    Ok(WaveNumberSet { k, k_max, n, vectors })
}

/// Largest `|Ṽ(−k_j) − conj Ṽ(k_j)|`.
pub fn symmetry_mismatch(wavenumbers: &WaveNumberSet, v: &[Complex64]) -> f64 {
    (0..v.len())
        .map(|p| (v[wavenumbers.partner(p)] - v[p].conj()).norm())
        .fold(0.0, f64::max)
}

/// `1/n1²` at each point from the truncated Fourier sum.
///
/// Fails if `Ṽ` is not conjugate-symmetric to `1e-8` relative to its largest
/// entry, or if the sum keeps an imaginary part above `1e-10` of the same scale.
pub fn reconstruct_perturbation(wavenumbers: &WaveNumberSet, v: &[Complex64], points: &[Vec<f64>]) -> Result<Vec<f64>> {
    if v.len() != wavenumbers.len() {
        return Err(Error::Dimension {
            expected: wavenumbers.len(),
            got: v.len(),
        });
    }
    let scale = v.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    if scale == 0.0 {
        return Ok(vec![0.0; points.len()]);
    }
    let mismatch = symmetry_mismatch(wavenumbers, v);
    if mismatch > 1e-8 * scale {
        return Err(Error::Symmetry { mismatch });
    }
    let norm = fourier_norm();
    points
        .iter()
        .map(|x| {
            let z: Complex64 = wavenumbers
                .vectors
                .iter()
                .zip(v)
                .map(|(k, c)| c * Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]))
                .sum::<Complex64>()
                * norm;
            if z.im.abs() > 1e-10 * scale {
                return Err(Error::ImaginaryResidue { residue: z.im.abs() });
            }
            Ok(z.re)
        })
        .collect()
}

/// `Ṽ(k_j) = (2π)^{-3/2} ∫ f(x) e^{−ik_j·x} dx` over a periodic box of side
/// `2π/h`, by the `n³`-point rectangle rule, which is exact for band-limited
/// `f` on the lattice.
pub fn project_onto_wavenumbers(
    wavenumbers: &WaveNumberSet,
    f: impl Fn(&[f64]) -> f64,
    samples_per_axis: usize,
) -> Vec<Complex64> {
    let h = wavenumbers.k_max / (wavenumbers.k + 1) as f64;
    let period = 2.0 * std::f64::consts::PI / h;
    let m = samples_per_axis;
    let dx = period / m as f64;
    let cell = dx.powi(3);
    let mut out = vec![Complex64::new(0.0, 0.0); wavenumbers.len()];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let x = [a as f64 * dx, b as f64 * dx, c as f64 * dx];
                let fx = f(&x);
                for (o, k) in out.iter_mut().zip(&wavenumbers.vectors) {
                    *o += fx * Complex64::from_polar(1.0, -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]));
                }
            }
        }
    }
    let norm = (2.0 * std::f64::consts::PI).powf(1.5) / period.powi(3);
    out.iter().map(|o| o * cell * norm).collect()
}

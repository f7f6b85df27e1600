//! Pair propagators, coefficient entries and the first-Born scattered field.
//!
//! Two-point rays at proper time `S` are reparametrizations of the `S = 1`
//! ray, `R_S(σ) = R_1(σ/S)`, so for every pair
//!
//! ```text
//! ∫₀^S dσ̄ f(R_S) |Ṙ_S|² n0⁴(R_S) = (1/S) ∫₀¹ du f(R_1(u)) |Ṙ_1(u)|² n0⁴(R_1(u))
//! S_cl(S) = S_cl(1) / S
//! ```
//!
//! and the outer proper-time integral factors out of every coefficient.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PhaseConvention, SurveyGeometry, TomographyConfig, WaveNumberSet};
use crate::kernels::{inverse_root, Branch};
use crate::medium::field::{Reciprocal, ScalarField};
use crate::medium::refraction::{fourier_norm, Perturbation, RefractionDecomposition};
use crate::medium::{AnisotropyField, DampingField, Medium, VelocityField};
use crate::paths::regularized_integral;
use crate::rays::{ray_action, two_point_ray, van_vleck_prefactor, RayPath};
use crate::stats;
use crate::{Error, Result};

fn ray_medium(n0: &Arc<dyn ScalarField>) -> Result<Medium> {
    Medium::new(
        VelocityField::from_arc(3, Arc::new(Reciprocal(n0.clone()))),
        DampingField::Zero,
        AnisotropyField::Zero(3),
        0.0,
    )
}

/// Proper-time weight of the pair propagator at `S`, including the `1/S` of
/// the rescaled insertion.
fn outer_weight(cfg: &TomographyConfig, s1: f64, s: f64) -> Complex64 {
    let (a, b) = (cfg.a(), cfg.b());
    match cfg.phase {
        PhaseConvention::Oscillatory => {
            Complex64::from_polar(1.0, a * s + b * s1 / (4.0 * s)) * inverse_root(s / b, 3, Branch::Principal) / s
        }
        PhaseConvention::Euclidean => {
            let g = (4.0 * PI * s / b).powf(-1.5);
            Complex64::new(g * (-a * s - b * s1 / (4.0 * s)).exp() / s, 0.0)
        }
    }
}

/// Everything about one source–receiver pair that does not depend on `k_j`.
#[derive(Debug, Clone)]
pub struct PairPropagator {
    pub ray: RayPath,
    /// `S_cl` of the `S = 1` ray.
    pub action: f64,
    pub van_vleck: f64,
    /// `−(κ/4) · VV · ∫dS w_η(S) (outer weight)`, without `(2π)^{-3/2}`.
    pub factor: Complex64,
    nodes: Vec<[f64; 3]>,
    /// Trapezoid weights times `|Ṙ_1|² n0⁴` on the `S = 1` ray.
    weights: Vec<f64>,
}

impl PairPropagator {
    pub fn new(x_src: &[f64], x_rec: &[f64], cfg: &TomographyConfig, n0: &Arc<dyn ScalarField>) -> Result<Self> {
        cfg.validate()?;
        let medium = ray_medium(n0)?;
        let ray = two_point_ray(x_rec, x_src, &medium, 1.0, cfg.ray_steps, cfg.ray_tol)?;
        let action = ray_action(&ray, &medium)?;
        let van_vleck = if cfg.van_vleck {
            van_vleck_prefactor(&ray, &medium)?
        } else {
            1.0
        };
        let m = ray.steps();
        let h = 1.0 / m as f64;
        let mut nodes = Vec::with_capacity(m + 1);
        let mut weights = Vec::with_capacity(m + 1);
        for (i, (r, v)) in ray.positions.iter().zip(&ray.velocities).enumerate() {
            let w = if i == 0 || i == m { 0.5 * h } else { h };
            let v2: f64 = v.iter().map(|c| c * c).sum();
            weights.push(w * v2 * n0.value(r).powi(4));
            nodes.push([r[0], r[1], r[2]]);
        }
        let integral = regularized_integral(|s| outer_weight(cfg, action, s), &cfg.proper_time)?;
        let factor = integral * (-0.25 * cfg.kappa() * van_vleck);
        Ok(Self {
            ray,
            action,
            van_vleck,
            factor,
            nodes,
            weights,
        })
    }

    /// `∫₀¹ du e^{ik·R_1} |Ṙ_1|² n0⁴`.
    pub fn plane_wave_insertion(&self, k: &[f64; 3]) -> Complex64 {
        let terms: Vec<Complex64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| Complex64::from_polar(*w, k[0] * r[0] + k[1] * r[1] + k[2] * r[2]))
            .collect();
        stats::sum_complex(&terms)
    }

    /// `∫₀¹ du f(R_1) |Ṙ_1|² n0⁴`.
    pub fn insertion(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(r, w)| w * f(r)).collect();
        stats::sum(&terms)
    }

    /// `A(k) = (2π)^{-3/2} · factor · ∫₀¹ e^{ik·R_1} |Ṙ_1|² n0⁴`.
    pub fn entry(&self, k: &[f64; 3]) -> Complex64 {
        self.factor * self.plane_wave_insertion(k) * fourier_norm()
    }
}

/// `A_pq(k_j)` along the ray from `x^(s)_q` to `x^(r)_p`.
pub fn coefficient_entry(
    p: usize,
    q: usize,
    k: &[f64; 3],
    geometry: &SurveyGeometry,
    cfg: &TomographyConfig,
    n0: &Arc<dyn ScalarField>,
) -> Result<Complex64> {
    let n = geometry.n_side();
    if p >= n || q >= n {
        return Err(Error::config("index", format!("(p, q) = ({p}, {q}) outside 0..{n}")));
    }
    Ok(PairPropagator::new(&geometry.sources[q], &geometry.receivers[p], cfg, n0)?.entry(k))
}

#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    pub matrix: DMatrix<Complex64>,
    /// `(p, q)` of each kept row.
    pub rows: Vec<(usize, usize)>,
    /// Pairs whose ray failed, with the reason.
    pub excluded: Vec<((usize, usize), String)>,
}

/// All rows of `[M]`; pairs whose ray cannot be found are dropped and listed.
pub fn coefficient_matrix(
    geometry: &SurveyGeometry,
    wavenumbers: &WaveNumberSet,
    cfg: &TomographyConfig,
    n0: &Arc<dyn ScalarField>,
) -> Result<CoefficientMatrix> {
    cfg.validate()?;
    let pairs = geometry.pairs();
    let props: Vec<Result<PairPropagator>> = pairs
        .par_iter()
        .map(|&(p, q)| PairPropagator::new(&geometry.sources[q], &geometry.receivers[p], cfg, n0))
        .collect();
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for (pq, prop) in pairs.into_iter().zip(props) {
        match prop {
            Ok(pp) => {
                rows.push(pq);
                kept.push(pp);
            }
            Err(e @ (Error::BvpFailure { .. } | Error::Integration { .. } | Error::Caustic { .. })) => {
                excluded.push((pq, e.to_string()))
            }
            Err(e) => return Err(e),
        }
    }
    let matrix = DMatrix::from_fn(kept.len(), wavenumbers.len(), |r, j| kept[r].entry(&wavenumbers.vectors[j]));
    Ok(CoefficientMatrix { matrix, rows, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BornMcConfig {
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for BornMcConfig {
    fn default() -> Self {
        Self { n_paths: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BornMethod {
    /// Insertion along the classical two-point ray.
    RayStationaryPhase,
    /// Bridge average of the insertion in the Euclidean convention with
    /// constant `n0`.
    EuclideanMc(BornMcConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McBorn {
    pub mean: Complex64,
    /// Standard error of the real and imaginary parts combined in quadrature.
    pub standard_error: f64,
    pub n_paths: usize,
}

/// First-Born scattered field at `x_r` for a source at `x_s`.
pub fn born_scattered_field(
    x_s: &[f64],
    x_r: &[f64],
    cfg: &TomographyConfig,
    decomp: &RefractionDecomposition,
    method: &BornMethod,
) -> Result<Complex64> {
    match method {
        BornMethod::RayStationaryPhase => {
            if matches!(decomp.n1, Perturbation::None) {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let prop = PairPropagator::new(x_s, x_r, cfg, &decomp.n0)?;
            Ok(prop.factor * prop.insertion(|r| decomp.perturbation_inv_sq(r)))
        }
        BornMethod::EuclideanMc(mc) => Ok(born_scattered_field_mc(x_s, x_r, cfg, decomp, mc)?.mean),
    }
}

fn check_euclidean(cfg: &TomographyConfig, decomp: &RefractionDecomposition) -> Result<()> {
    if cfg.phase != PhaseConvention::Euclidean {
        return Err(Error::config("phase", "bridge averages need the euclidean convention"));
    }
    if !decomp.n0.is_constant() {
        return Err(Error::Unsupported("bridge averages need a constant reference index".into()));
    }
    Ok(())
}

/// Standard Brownian bridge on `[0, 1]` at `steps + 1` nodes.
fn unit_bridge(steps: usize, seed: u64, index: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let sd = (1.0 / steps as f64).sqrt();
    let mut walk = vec![[0.0; 3]; steps + 1];
    for m in 1..=steps {
        for c in 0..3 {
            let z: f64 = StandardNormal.sample(&mut rng);
            walk[m][c] = walk[m - 1][c] + sd * z;
        }
    }
    let end = walk[steps];
    for (m, w) in walk.iter_mut().enumerate() {
        let u = m as f64 / steps as f64;
        for c in 0..3 {
            w[c] -= u * end[c];
        }
    }
    walk
}

/// Monte Carlo bridge average: the insertion is evaluated on
/// `R_1(u) + √(2S/b) B(u)` for standard bridges `B`, one proper-time
/// quadrature per bridge.
pub fn born_scattered_field_mc(
    x_s: &[f64],
    x_r: &[f64],
    cfg: &TomographyConfig,
    decomp: &RefractionDecomposition,
    mc: &BornMcConfig,
) -> Result<McBorn> {
    check_euclidean(cfg, decomp)?;
    if mc.n_paths < 2 {
        return Err(Error::config("n_paths", "need at least 2"));
    }
    let prop = PairPropagator::new(x_s, x_r, cfg, &decomp.n0)?;
    let b = cfg.b();
    let scale = -0.25 * cfg.kappa() * prop.van_vleck;
    let steps = prop.nodes.len() - 1;
    let values: Vec<Result<f64>> = (0..mc.n_paths)
        .into_par_iter()
        .map(|i| {
            let bridge = unit_bridge(steps, mc.seed, i as u64);
            let v = regularized_integral(
                |s| {
                    let amp = (2.0 * s / b).sqrt();
                    let ins: f64 = prop
                        .nodes
                        .iter()
                        .zip(&bridge)
                        .zip(&prop.weights)
                        .map(|((r, d), w)| {
                            let x = [r[0] + amp * d[0], r[1] + amp * d[1], r[2] + amp * d[2]];
                            w * decomp.perturbation_inv_sq(&x)
                        })
                        .sum();
                    outer_weight(cfg, prop.action, s) * ins
                },
                &cfg.proper_time,
            )?;
            Ok(v.re * scale)
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let (mean, se) = stats::mean_and_stderr(&values);
    Ok(McBorn {
        mean: Complex64::new(mean, 0.0),
        standard_error: se,
        n_paths: mc.n_paths,
    })
}

/// Exact bridge average for a Fourier perturbation:
/// `E[e^{ik·r(u)}] = e^{ik·R_1(u)} e^{−|k|² u(1−u) S / b}`.
pub fn euclidean_bridge_average(
    x_s: &[f64],
    x_r: &[f64],
    cfg: &TomographyConfig,
    decomp: &RefractionDecomposition,
) -> Result<Complex64> {
    check_euclidean(cfg, decomp)?;
    let modes = match &decomp.n1 {
        Perturbation::Fourier(m) => m,
        Perturbation::None => return Ok(Complex64::new(0.0, 0.0)),
        Perturbation::Index(_) => {
            return Err(Error::Unsupported("closed-form bridge average needs Fourier modes".into()))
        }
    };
    let prop = PairPropagator::new(x_s, x_r, cfg, &decomp.n0)?;
    let b = cfg.b();
    let steps = prop.nodes.len() - 1;
    let v = regularized_integral(
        |s| {
            let mut ins = Complex64::new(0.0, 0.0);
            for (m, (r, w)) in prop.nodes.iter().zip(&prop.weights).enumerate() {
                let u = m as f64 / steps as f64;
                for mode in modes {
                    let k2: f64 = mode.k.iter().map(|c| c * c).sum();
                    let phase: f64 = mode.k.iter().zip(r).map(|(k, x)| k * x).sum();
                    ins += mode.value * Complex64::from_polar(*w * (-k2 * u * (1.0 - u) * s / b).exp(), phase);
                }
            }
            outer_weight(cfg, prop.action, s) * Complex64::new((ins * fourier_norm()).re, 0.0)
        },
        &cfg.proper_time,
    )?;
    Ok(v * (-0.25 * cfg.kappa() * prop.van_vleck))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::field::Constant;
    use crate::medium::refraction::FourierMode;
    use crate::tomography::wavenumber_set;

    fn unit_n0() -> Arc<dyn ScalarField> {
        Arc::new(Constant(1.0))
    }

    fn euclidean(b_scale: f64) -> TomographyConfig {
        TomographyConfig {
            schulman_b: b_scale,
            phase: PhaseConvention::Euclidean,
            ..Default::default()
        }
    }

    fn pair_modes(k: [f64; 3], v: Complex64) -> Perturbation {
        Perturbation::Fourier(vec![
            FourierMode { k: k.to_vec(), value: v },
            FourierMode {
                k: k.iter().map(|c| -c).collect(),
                value: v.conj(),
            },
        ])
    }

    #[test]
    fn zero_wavevector_on_a_chord() {
        let cfg = TomographyConfig::default();
        let (xs, xr) = ([0.0, 0.0, 0.0], [1.2, 0.5, -0.3]);
        let prop = PairPropagator::new(&xs, &xr, &cfg, &unit_n0()).unwrap();
        let d2: f64 = xs.iter().zip(&xr).map(|(a, b)| (a - b) * (a - b)).sum();
        // ∫₀^S Ṙ² dσ̄ = |Δ|²/S, i.e. |Δ|² after the 1/S rescaling.
        assert!((prop.plane_wave_insertion(&[0.0; 3]).re - d2).abs() < 1e-10);
        assert!((prop.action - d2).abs() < 1e-10);
        let direct = regularized_integral(
            |s| {
                Complex64::from_polar(1.0, cfg.a() * s + cfg.b() * d2 / (4.0 * s))
                    * inverse_root(s / cfg.b(), 3, Branch::Principal)
                    * (d2 / s)
            },
            &cfg.proper_time,
        )
        .unwrap();
        let want = direct * (-0.25 * cfg.kappa()) * fourier_norm();
        assert!((prop.entry(&[0.0; 3]) - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn zero_kappa_gives_zero_entry() {
        let cfg = TomographyConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        let g = SurveyGeometry::crosswell(1, 2.0, 1.0).unwrap();
        let e = coefficient_entry(0, 1, &[0.3, 0.0, 0.1], &g, &cfg, &unit_n0()).unwrap();
        assert_eq!(e, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn euclidean_entries_are_conjugate_in_k() {
        let cfg = euclidean(1.0);
        let g = SurveyGeometry::crosswell(1, 2.0, 1.0).unwrap();
        let k = [0.4, -0.2, 0.7];
        let a = coefficient_entry(1, 2, &k, &g, &cfg, &unit_n0()).unwrap();
        let b = coefficient_entry(1, 2, &[-0.4, 0.2, -0.7], &g, &cfg, &unit_n0()).unwrap();
        assert!((a - b.conj()).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn born_field_vanishes_without_perturbation() {
        let cfg = TomographyConfig::default();
        let d = RefractionDecomposition::new(Constant(1.0), Perturbation::None, 0.01);
        let f = born_scattered_field(&[0.0; 3], &[1.0, 0.0, 0.0], &cfg, &d, &BornMethod::RayStationaryPhase).unwrap();
        assert_eq!(f, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn born_field_is_linear_and_matches_matrix() {
        let cfg = TomographyConfig::default();
        let w = wavenumber_set(1, 1.5).unwrap();
        let (xs, xr) = ([0.0, 0.1, 0.0], [2.0, -0.2, 0.4]);
        let field = |modes: Perturbation| {
            let d = RefractionDecomposition::new(Constant(1.0), modes, cfg.epsilon);
            born_scattered_field(&xs, &xr, &cfg, &d, &BornMethod::RayStationaryPhase).unwrap()
        };
        let va = Complex64::new(0.3, 0.2);
        let vb = Complex64::new(-0.1, 0.4);
        let (ka, kb) = (w.get(1), w.get(4));
        let fa = field(pair_modes(ka, va));
        let fb = field(pair_modes(kb, vb));
        let mut both = match pair_modes(ka, va) {
            Perturbation::Fourier(m) => m,
            _ => unreachable!(),
        };
        if let Perturbation::Fourier(m) = pair_modes(kb, vb) {
            both.extend(m);
        }
        let fab = field(Perturbation::Fourier(both));
        assert!((fab - fa - fb).norm() < 1e-10 * fab.norm());

        let prop = PairPropagator::new(&xs, &xr, &cfg, &unit_n0()).unwrap();
        let contraction = prop.entry(&ka) * va + prop.entry(&w.get(-1)) * va.conj();
        assert!((contraction - fa).norm() < 1e-10 * fa.norm());
    }

    #[test]
    fn bridge_monte_carlo_matches_closed_form() {
        let cfg = euclidean(1.0);
        let d = RefractionDecomposition::new(Constant(1.0), pair_modes([1.5, 0.5, -1.0], Complex64::new(0.4, 0.1)), 0.01);
        let (xs, xr) = ([0.0; 3], [1.0, 0.3, 0.2]);
        let exact = euclidean_bridge_average(&xs, &xr, &cfg, &d).unwrap();
        let mc = born_scattered_field_mc(&xs, &xr, &cfg, &d, &BornMcConfig { n_paths: 400, seed: 3 }).unwrap();
        let z = (mc.mean.re - exact.re) / mc.standard_error;
        assert!(z.abs() < 4.0, "z = {z}");
        let ray = born_scattered_field(&xs, &xr, &cfg, &d, &BornMethod::RayStationaryPhase).unwrap();
        assert!((ray - exact).norm() > 3.0 * mc.standard_error);
    }

    #[test]
    fn ray_method_approaches_bridge_average_for_large_b() {
        let d = RefractionDecomposition::new(Constant(1.0), pair_modes([1.0, 0.5, 0.0], Complex64::new(0.3, 0.0)), 0.01);
        let (xs, xr) = ([0.0; 3], [1.0, 0.3, 0.2]);
        let rel = |bs: f64| {
            let cfg = euclidean(bs);
            let e = euclidean_bridge_average(&xs, &xr, &cfg, &d).unwrap();
            let r = born_scattered_field(&xs, &xr, &cfg, &d, &BornMethod::RayStationaryPhase).unwrap();
            (r - e).norm() / e.norm()
        };
        let (r1, r2) = (rel(3.0), rel(30.0));
        assert!(r2 < 0.2 * r1, "{r1} {r2}");
    }

    #[test]
    fn mc_is_deterministic_and_requires_euclidean() {
        let d = RefractionDecomposition::new(Constant(1.0), pair_modes([1.0, 0.0, 0.0], Complex64::new(0.3, 0.0)), 0.01);
        let mc = BornMcConfig { n_paths: 50, seed: 9 };
        let a = born_scattered_field_mc(&[0.0; 3], &[1.0, 0.0, 0.0], &euclidean(1.0), &d, &mc).unwrap();
        let b = born_scattered_field_mc(&[0.0; 3], &[1.0, 0.0, 0.0], &euclidean(1.0), &d, &mc).unwrap();
        assert_eq!(a, b);
        let r = born_scattered_field_mc(&[0.0; 3], &[1.0, 0.0, 0.0], &TomographyConfig::default(), &d, &mc);
        assert!(r.is_err());
    }
}

//! Least-squares inversion of the stacked survey equations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::forward::{coefficient_matrix, CoefficientMatrix};
use super::{SurveyGeometry, TomographyConfig, WaveNumberSet};
use crate::medium::field::ScalarField;
use crate::{Error, Result};

/// Largest condition number of `M^H M` accepted without regularization.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalSolution {
    pub solution: DVector<Complex64>,
    /// Condition number of `M^H M`.
    pub condition: f64,
    /// `‖MṼ − U‖ / ‖U‖`.
    pub residual: f64,
}

/// Solves `(M^H M + ω I) Ṽ = M^H U`.
pub fn solve_normal_equations(m: &DMatrix<Complex64>, u: &DVector<Complex64>, omega: f64) -> Result<NormalSolution> {
    if m.nrows() != u.len() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            got: u.len(),
        });
    }
    if !(omega >= 0.0) {
        return Err(Error::config("omega_reg", format!("{omega} must be >= 0")));
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    // Rows may be fewer than unknowns when pairs are excluded.
    let smin = if m.nrows() < m.ncols() { 0.0 } else { sv.min() };
    let condition = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
    if omega == 0.0 && !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let mh = m.adjoint();
    let mut normal = &mh * m;
    for i in 0..normal.nrows() {
        normal[(i, i)] += Complex64::new(omega, 0.0);
    }
    let rhs = &mh * u;
    let solution = match normal.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singularity("normal matrix is singular".into()))?,
    };
    let un = u.norm();
    let residual = if un > 0.0 { (m * &solution - u).norm() / un } else { 0.0 };
    Ok(NormalSolution {
        solution,
        condition,
        residual,
    })
}

#[derive(Debug, Clone)]
pub struct TomographySystem {
    pub wavenumbers: WaveNumberSet,
    pub coefficients: CoefficientMatrix,
    /// Data for the kept rows, in row order.
    pub data: DVector<Complex64>,
    pub omega_reg: f64,
    pub solution: NormalSolution,
}

impl TomographySystem {
    pub fn values(&self) -> Vec<Complex64> {
        self.solution.solution.iter().cloned().collect()
    }
}

/// Builds `[M]` over the survey and inverts `data`, given in
/// [`SurveyGeometry::pairs`] order.
pub fn assemble_and_invert(
    geometry: &SurveyGeometry,
    wavenumbers: &WaveNumberSet,
    cfg: &TomographyConfig,
    n0: &Arc<dyn ScalarField>,
    data: &[Complex64],
) -> Result<TomographySystem> {
    let n = geometry.n_side();
    if data.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: data.len(),
        });
    }
    let coefficients = coefficient_matrix(geometry, wavenumbers, cfg, n0)?;
    let kept = DVector::from_iterator(
        coefficients.rows.len(),
        coefficients.rows.iter().map(|&(p, q)| data[p * n + q]),
    );
    let solution = solve_normal_equations(&coefficients.matrix, &kept, cfg.omega_reg)?;
    Ok(TomographySystem {
        wavenumbers: wavenumbers.clone(),
        coefficients,
        data: kept,
        omega_reg: cfg.omega_reg,
        solution,
    })
}

/// Averages each coefficient with the conjugate of its partner.
pub fn conjugate_symmetrize(wavenumbers: &WaveNumberSet, v: &[Complex64]) -> Vec<Complex64> {
    (0..v.len())
        .map(|pos| 0.5 * (v[pos] + v[wavenumbers.partner(pos)].conj()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LCurvePoint {
    pub omega: f64,
    pub residual_norm: f64,
    pub solution_norm: f64,
    /// Curvature of `(log ‖r‖², log ‖Ṽ‖²)`; the corner is its maximum.
    pub curvature: f64,
}

/// Log-spaced weights from `1e-2 σ_min²` to `σ_max²` of `m`.
pub fn omega_sweep(m: &DMatrix<Complex64>, n_points: usize) -> Vec<f64> {
    let sv = m.clone().singular_values();
    let hi = sv.max().powi(2);
    let lo = (sv.min().powi(2) * 1e-2).max(hi * 1e-16);
    let n = n_points.max(2);
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Residual norm, solution norm and curvature over a sweep of positive
/// weights, from the singular value expansion of the Tikhonov filter.
pub fn l_curve(m: &DMatrix<Complex64>, u: &DVector<Complex64>, omegas: &[f64]) -> Result<Vec<LCurvePoint>> {
    if m.nrows() != u.len() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            got: u.len(),
        });
    }
    let svd = m.clone().svd(true, false);
    let uu = svd.u.as_ref().expect("left vectors requested");
    let beta = uu.adjoint() * u;
    let outside = (u.norm_squared() - beta.norm_squared()).max(0.0);
    let sv = &svd.singular_values;
    omegas
        .iter()
        .map(|&omega| {
            if !(omega > 0.0) {
                return Err(Error::config("omega_reg", "sweep values must be positive"));
            }
            let lam = omega.sqrt();
            let (mut rho, mut eta, mut deta) = (outside, 0.0, 0.0);
            for (s, b) in sv.iter().zip(beta.iter()) {
                let b2 = b.norm_sqr();
                let f = s * s / (s * s + omega);
                rho += (1.0 - f).powi(2) * b2;
                if *s > 0.0 {
                    eta += f * f * b2 / (s * s);
                    deta -= 4.0 / lam * (1.0 - f) * f * f * b2 / (s * s);
                }
            }
            let curvature = if deta != 0.0 {
                2.0 * eta * rho / deta * (omega * deta * rho + 2.0 * lam * rho * eta + omega * omega * eta * deta)
                    / (omega * omega * eta * eta + rho * rho).powf(1.5)
            } else {
                0.0
            };
            Ok(LCurvePoint {
                omega,
                residual_norm: rho.sqrt(),
                solution_norm: eta.sqrt(),
                curvature,
            })
        })
        .collect()
}

/// Index of the sweep point of maximum curvature.
pub fn l_curve_corner(points: &[LCurvePoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.curvature.is_finite())
        .max_by(|a, b| a.1.curvature.total_cmp(&b.1.curvature))
        .map(|(i, _)| i)
}

/// `‖Ṽ_{−r} − Ṽ‖ / ‖Ṽ‖` for each dropped row `r`, at weight `omega > 0`.
pub fn leave_one_out(m: &DMatrix<Complex64>, u: &DVector<Complex64>, omega: f64) -> Result<Vec<f64>> {
    if !(omega > 0.0) {
        return Err(Error::config("omega_reg", "leave-one-out needs a positive weight"));
    }
    let full = solve_normal_equations(m, u, omega)?.solution;
    let fnorm = full.norm().max(f64::MIN_POSITIVE);
    (0..m.nrows())
        .map(|r| {
            let mr = m.clone().remove_row(r);
            let ur = u.clone().remove_row(r);
            let s = solve_normal_equations(&mr, &ur, omega)?.solution;
            Ok((s - &full).norm() / fnorm)
        })
        .collect()
}

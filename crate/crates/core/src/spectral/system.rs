//! Galerkin stiffness and damping matrices and the time stepper.
//!
//! Coefficients are stored per mode and component at index `n·N + i`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, LU};

use super::{sine_mode, sine_mode_d1, SpectralBasis, TensorGrid};
use crate::medium::{elasticity_tensor_at, DampingField, Medium};
use crate::{Error, Result};

/// Largest `quadrature points × modes × N²` the quadrature assembly accepts.
const ASSEMBLY_BUDGET: usize = 80_000_000;

/// Galerkin matrix of `C_ijkl ∂_j ∂_l`.
#[derive(Debug, Clone, PartialEq)]
pub enum Stiffness {
    /// `C_ijkl = C0² δ_ik δ_jl` with constant `C0`: entries `C0² λ_n`.
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Stiffness {
    pub fn len(&self) -> usize {
        match self {
            Stiffness::Diagonal(d) => d.len(),
            Stiffness::Dense(k) => k.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        match self {
            Stiffness::Diagonal(d) => d.component_mul(u),
            Stiffness::Dense(k) => k * u,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Stiffness::Diagonal(d) => DMatrix::from_diagonal(d),
            Stiffness::Dense(k) => k.clone(),
        }
    }

    /// `‖K − Kᵀ‖_F / ‖K‖_F`
    pub fn asymmetry(&self) -> f64 {
        match self {
            Stiffness::Diagonal(_) => 0.0,
            Stiffness::Dense(k) => {
                let n = k.norm();
                if n == 0.0 {
                    0.0
                } else {
                    (k - k.transpose()).norm() / n
                }
            }
        }
    }
}

/// Galerkin projection of `ν(x)`, shared by all components.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingMatrix {
    None,
    Scalar(f64),
    /// `D_nm = ⟨φ_n, ν φ_m⟩`
    Modal(DMatrix<f64>),
}

impl DampingMatrix {
    fn apply(&self, v: &DVector<f64>, n_comp: usize) -> DVector<f64> {
        match self {
            DampingMatrix::None => DVector::zeros(v.len()),
            DampingMatrix::Scalar(nu) => v * *nu,
            DampingMatrix::Modal(d) => per_component(v, n_comp, |c| d * c),
        }
    }
}

fn per_component(v: &DVector<f64>, n_comp: usize, f: impl Fn(&DVector<f64>) -> DVector<f64>) -> DVector<f64> {
    let p = v.len() / n_comp;
    let mut out = DVector::zeros(v.len());
    for i in 0..n_comp {
        let c = DVector::from_fn(p, |n, _| v[n * n_comp + i]);
        let r = f(&c);
        for n in 0..p {
            out[n * n_comp + i] = r[n];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub t: f64,
}

impl SpectralState {
    pub fn zeros(len: usize) -> Self {
        Self {
            u: DVector::zeros(len),
            v: DVector::zeros(len),
            t: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralSystem {
    pub basis: SpectralBasis,
    pub n_comp: usize,
    pub stiffness: Stiffness,
    pub damping: DampingMatrix,
    /// Speed bound used by the stability criterion.
    pub c_max: f64,
}

/// `⟨s_n, d^order s_m⟩` on `[0, L]`.
fn axis_factor(n: usize, m: usize, l: f64, order: u8) -> f64 {
    match order {
        0 => (n == m) as u8 as f64,
        2 => {
            if n == m {
                -(m as f64 * PI / l).powi(2)
            } else {
                0.0
            }
        }
        _ => {
            if (n + m) % 2 == 1 {
                let (a, b) = (n as f64, m as f64);
                4.0 * a * b / (l * (a * a - b * b))
            } else {
                0.0
            }
        }
    }
}

/// Upper bound on the local wave speed: `√(C0² + ε N² max|γ|)`.
fn local_speed_bound(medium: &Medium, x: &[f64]) -> Result<f64> {
    let c0 = medium.velocity.checked_speed(x)?;
    let n = medium.dim as f64;
    let g = if medium.epsilon == 0.0 {
        0.0
    } else {
        medium.epsilon * n * n * medium.anisotropy.tensor_at(x).max_abs()
    };
    Ok((c0 * c0 + g).sqrt())
}

impl SpectralSystem {
    /// Closed-form entries for position-independent `C_ijkl`, quadrature
    /// otherwise.
    pub fn assemble(basis: &SpectralBasis, medium: &Medium) -> Result<Self> {
        Self::assemble_with(basis, medium, 12, false)
    }

    /// `extra` sets the Gauss order per axis as in [`TensorGrid::for_basis`];
    /// `force_quadrature` skips the closed form.
    pub fn assemble_with(basis: &SpectralBasis, medium: &Medium, extra: usize, force_quadrature: bool) -> Result<Self> {
        let n = basis.dim();
        if medium.dim != n {
            return Err(Error::Dimension {
                expected: n,
                got: medium.dim,
            });
        }
        let constant = medium.velocity.is_constant() && medium.anisotropy.is_constant();
        let center = basis.domain.center();
        let mut grid = None;
        let stiffness = if constant && !force_quadrature {
            let c = elasticity_tensor_at(medium, &center)?;
            if medium.epsilon == 0.0 || medium.anisotropy.is_zero() {
                let c0 = medium.velocity.checked_speed(&center)?;
                Stiffness::Diagonal(DVector::from_fn(basis.len() * n, |r, _| c0 * c0 * basis.eigenvalues[r / n]))
            } else {
                Stiffness::Dense(closed_form_stiffness(basis, &c))
            }
        } else {
            let g = TensorGrid::for_basis(basis, extra);
            let k = quadrature_stiffness(basis, medium, &g)?;
            grid = Some(g);
            Stiffness::Dense(k)
        };

        let damping = match &medium.damping {
            DampingField::Zero => DampingMatrix::None,
            DampingField::Constant(nu) => DampingMatrix::Scalar(*nu),
            DampingField::Spatial(f) => {
                let g = grid.get_or_insert_with(|| TensorGrid::for_basis(basis, extra));
                let p = basis.len();
                let mut d = DMatrix::zeros(p, p);
                for (x, w) in g.points.iter().zip(&g.weights) {
                    let ph = DVector::from_vec(basis.phi_all(x));
                    d += (&ph * ph.transpose()) * (w * f.value(x));
                }
                DampingMatrix::Modal(d)
            }
            DampingField::SpaceTime(_) => {
                return Err(Error::Unsupported(
                    "time-dependent damping cannot be projected onto a fixed Galerkin matrix".into(),
                ))
            }
        };

        let c_max = match &grid {
            Some(g) if !constant => g
                .points
                .iter()
                .map(|x| local_speed_bound(medium, x))
                .try_fold(0.0f64, |a, c| c.map(|c| a.max(c)))?,
            _ => local_speed_bound(medium, &center)?,
        };
        Ok(Self {
            basis: basis.clone(),
            n_comp: n,
            stiffness,
            damping,
            c_max,
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len() * self.n_comp
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `2 / (C_max √|λ_max|)`
    pub fn stability_bound(&self) -> f64 {
        2.0 / (self.c_max * self.basis.lambda_max_abs().sqrt())
    }

    /// `(vᵀv − uᵀKu) / 2`
    pub fn energy(&self, s: &SpectralState) -> f64 {
        0.5 * (s.v.dot(&s.v) - s.u.dot(&self.stiffness.apply(&s.u)))
    }

    /// Zero displacement and velocity `φ_n(x_src) e_k`: the response to
    /// `δ(x − x_src) δ(t) e_k`.
    pub fn impulse(&self, x_src: &[f64], component: usize) -> Result<SpectralState> {
        if component >= self.n_comp {
            return Err(Error::config("component", format!("{component} >= {}", self.n_comp)));
        }
        let w = super::delta_source_coeffs(x_src, &self.basis)?;
        let mut s = SpectralState::zeros(self.len());
        for (n, wn) in w.iter().enumerate() {
            s.v[n * self.n_comp + component] = *wn;
        }
        Ok(s)
    }

    /// `U^i(x) = Σ_n u_{n,i} φ_n(x)`
    pub fn sample(&self, s: &SpectralState, x: &[f64]) -> Vec<f64> {
        let ph = self.basis.phi_all(x);
        self.sample_with(s, &ph)
    }

    /// [`Self::sample`] with `phis = basis.phi_all(x)` precomputed.
    pub fn sample_with(&self, s: &SpectralState, phis: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_comp];
        for (n, p) in phis.iter().enumerate() {
            for (i, o) in out.iter_mut().enumerate() {
                *o += p * s.u[n * self.n_comp + i];
            }
        }
        out
    }

    /// Steps `n_steps` times, calling `observer` on the initial and every
    /// subsequent state; returns the final state.
    pub fn evolve_observed(
        &self,
        state: SpectralState,
        dt: f64,
        n_steps: usize,
        mut observer: impl FnMut(&SpectralState),
    ) -> Result<SpectralState> {
        if state.u.len() != self.len() || state.v.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: state.u.len(),
            });
        }
        let bound = self.stability_bound();
        if !(dt > 0.0 && dt <= bound) {
            return Err(Error::Stability { dt, bound });
        }
        let mut s = state;
        let t0 = s.t;
        let mut ku = self.stiffness.apply(&s.u);
        observer(&s);
        let h = 0.5 * dt;
        match &self.damping {
            DampingMatrix::None => {
                for step in 1..=n_steps {
                    s.v.axpy(h, &ku, 1.0);
                    s.u.axpy(dt, &s.v, 1.0);
                    ku = self.stiffness.apply(&s.u);
                    s.v.axpy(h, &ku, 1.0);
                    s.t = t0 + dt * step as f64;
                    observer(&s);
                }
            }
            damping => {
                let lu: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = match damping {
                    DampingMatrix::Modal(d) => {
                        let p = d.nrows();
                        Some((DMatrix::identity(p, p) + d * h).lu())
                    }
                    _ => None,
                };
                for step in 1..=n_steps {
                    let dv = damping.apply(&s.v, self.n_comp);
                    let mut u_new = s.u.clone();
                    u_new.axpy(dt, &s.v, 1.0);
                    u_new.axpy(0.5 * dt * dt, &(&ku - &dv), 1.0);
                    let ku_new = self.stiffness.apply(&u_new);
                    let rhs = &s.v - &dv * h + (&ku + &ku_new) * h;
                    s.v = match (damping, &lu) {
                        (DampingMatrix::Scalar(nu), _) => rhs / (1.0 + h * nu),
                        (_, Some(lu)) => per_component(&rhs, self.n_comp, |c| {
                            lu.solve(c).expect("I + dt/2 D is positive definite")
                        }),
                        _ => rhs,
                    };
                    s.u = u_new;
                    ku = ku_new;
                    s.t = t0 + dt * step as f64;
                    observer(&s);
                }
            }
        }
        Ok(s)
    }

    /// States at steps `0, every, 2·every, …` up to `n_steps`.
    pub fn evolve(&self, state: SpectralState, dt: f64, n_steps: usize, every: usize) -> Result<Vec<SpectralState>> {
        let every = every.max(1);
        let mut out = Vec::with_capacity(n_steps / every + 1);
        let mut k = 0usize;
        self.evolve_observed(state, dt, n_steps, |s| {
            if k.is_multiple_of(every) {
                out.push(s.clone());
            }
            k += 1;
        })?;
        Ok(out)
    }
}

/// Assembles the system for `medium` and records every step.
pub fn evolve(
    state: SpectralState,
    medium: &Medium,
    basis: &SpectralBasis,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<SpectralState>> {
    SpectralSystem::assemble(basis, medium)?.evolve(state, dt, n_steps, 1)
}

fn closed_form_stiffness(basis: &SpectralBasis, c: &crate::medium::Tensor4) -> DMatrix<f64> {
    let n = basis.dim();
    let p = basis.len();
    let lens = &basis.domain.lengths;
    let mut k = DMatrix::zeros(p * n, p * n);
    let mut t = vec![0.0; n * n];
    for a in 0..p {
        for b in 0..p {
            let (ma, mb) = (&basis.modes[a], &basis.modes[b]);
            let differing = ma.iter().zip(mb).filter(|(x, y)| x != y).count();
            if differing > 2 {
                continue;
            }
            for j in 0..n {
                for l in 0..n {
                    t[j * n + l] = (0..n)
                        .map(|d| {
                            let order = (d == j) as u8 + (d == l) as u8;
                            axis_factor(ma[d], mb[d], lens[d], order)
                        })
                        .product();
                }
            }
            if t.iter().all(|v| *v == 0.0) {
                continue;
            }
            for i in 0..n {
                for kk in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        for l in 0..n {
                            s += c.get(i, j, kk, l) * t[j * n + l];
                        }
                    }
                    k[(a * n + i, b * n + kk)] = s;
                }
            }
        }
    }
    k
}

/// `K[(n,i),(m,k)] = Σ_q w_q φ_n(x_q) C_ijkl(x_q) ∂_j∂_l φ_m(x_q)`.
fn quadrature_stiffness(basis: &SpectralBasis, medium: &Medium, grid: &TensorGrid) -> Result<DMatrix<f64>> {
    let n = basis.dim();
    let p = basis.len();
    let q = grid.len();
    let nn = n * n;
    if q.saturating_mul(p).saturating_mul(nn) > ASSEMBLY_BUDGET {
        return Err(Error::Unsupported(format!(
            "quadrature assembly with {q} points and {p} modes exceeds the size budget"
        )));
    }
    let mut phi = DMatrix::zeros(q, p);
    let mut b = DMatrix::zeros(q, p * nn);
    for (iq, (x, &w)) in grid.points.iter().zip(&grid.weights).enumerate() {
        let s0 = basis.axis_tables(x, sine_mode);
        let s1 = basis.axis_tables(x, sine_mode_d1);
        let c = elasticity_tensor_at(medium, x)?;
        for (m, mode) in basis.modes.iter().enumerate() {
            let mut h = vec![0.0; nn];
            for j in 0..n {
                for l in 0..n {
                    h[j * n + l] = (0..n)
                        .map(|d| {
                            let k = mode[d];
                            match (d == j) as u8 + (d == l) as u8 {
                                0 => s0[d][k],
                                1 => s1[d][k],
                                _ => -(k as f64 * PI / basis.domain.lengths[d]).powi(2) * s0[d][k],
                            }
                        })
                        .product();
                }
            }
            phi[(iq, m)] = w * mode.iter().enumerate().map(|(d, &k)| s0[d][k]).product::<f64>();
            for i in 0..n {
                for kk in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        for l in 0..n {
                            s += c.get(i, j, kk, l) * h[j * n + l];
                        }
                    }
                    b[(iq, m * nn + i * n + kk)] = s;
                }
            }
        }
    }
    let r = phi.transpose() * b;
    let mut k = DMatrix::zeros(p * n, p * n);
    for a in 0..p {
        for m in 0..p {
            for i in 0..n {
                for kk in 0..n {
                    k[(a * n + i, m * n + kk)] = r[(a, m * nn + i * n + kk)];
                }
            }
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::field::GaussianBump;
    use crate::medium::{AnisotropyField, DampingField, Tensor4, VelocityField};
    use crate::spectral::{dirichlet_eigenbasis, BoxDomain};

    fn single_mode(c0: f64) -> (SpectralSystem, f64) {
        let b = dirichlet_eigenbasis(&BoxDomain::cube(1, 1.0).unwrap(), 10.0).unwrap();
        let sys = SpectralSystem::assemble(&b, &Medium::homogeneous(1, c0)).unwrap();
        (sys, c0 * PI)
    }

    fn run_single_mode(dt: f64) -> f64 {
        let (sys, omega) = single_mode(1.0);
        let periods = 10.0;
        let n_steps = (periods * 2.0 * PI / omega / dt).round() as usize;
        let mut s = SpectralState::zeros(1);
        s.u[0] = 1.0;
        let mut err: f64 = 0.0;
        sys.evolve_observed(s, dt, n_steps, |st| {
            err = err.max((st.u[0] - (omega * st.t).cos()).abs());
        })
        .unwrap();
        err
    }

    #[test]
    fn single_mode_tracks_harmonic_oscillator() {
        assert!(run_single_mode(1e-4) < 1e-6);
    }

    #[test]
    fn stepper_is_second_order() {
        let e1 = run_single_mode(4e-3);
        let e2 = run_single_mode(2e-3);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn constant_damping_envelope() {
        let b = dirichlet_eigenbasis(&BoxDomain::cube(1, 1.0).unwrap(), 10.0).unwrap();
        let nu = 0.4;
        let m = Medium::homogeneous(1, 1.0).with_damping(DampingField::Constant(nu));
        let sys = SpectralSystem::assemble(&b, &m).unwrap();
        let mut s = SpectralState::zeros(1);
        s.u[0] = 1.0;
        let dt = 1e-3;
        let mut ts = Vec::new();
        let mut logs = Vec::new();
        let omega2 = PI * PI;
        sys.evolve_observed(s, dt, 10_000, |st| {
            // Envelope of a damped oscillator: √(u² + (u̇ + νu/2)²/ω_d²).
            let wd2 = omega2 - nu * nu / 4.0;
            let a2 = st.u[0].powi(2) + (st.v[0] + 0.5 * nu * st.u[0]).powi(2) / wd2;
            ts.push(st.t);
            logs.push(0.5 * a2.ln());
        })
        .unwrap();
        let rate = -crate::stats::linear_slope(&ts, &logs);
        assert!((rate - nu / 2.0).abs() < 0.01 * nu / 2.0, "rate {rate}");
    }

    #[test]
    fn energy_is_conserved_without_damping() {
        let b = dirichlet_eigenbasis(&BoxDomain::cube(3, 1.0).unwrap(), 400.0).unwrap();
        let sys = SpectralSystem::assemble(&b, &Medium::homogeneous(3, 1.0)).unwrap();
        let s = sys.impulse(&[0.31, 0.47, 0.52], 0).unwrap();
        let e0 = sys.energy(&s);
        let mut drift: f64 = 0.0;
        sys.evolve_observed(s, 5e-5, 1000, |st| {
            drift = drift.max((sys.energy(st) - e0).abs() / e0);
        })
        .unwrap();
        assert!(drift < 1e-6, "drift {drift}");
    }

    #[test]
    fn unstable_step_is_rejected() {
        let (sys, omega) = single_mode(1.0);
        let r = sys.evolve(SpectralState::zeros(1), 2.5 / omega, 1, 1);
        assert!(matches!(r, Err(Error::Stability { .. })));
    }

    fn anisotropic(eps: f64) -> Medium {
        let gamma = Tensor4::from_entries_symmetrized(3, &[([0, 0, 0, 0], 1.0), ([0, 1, 0, 1], 0.5), ([0, 0, 1, 1], 0.3)]);
        Medium::homogeneous(3, 1.0).with_anisotropy(AnisotropyField::Constant(gamma), eps)
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let b = dirichlet_eigenbasis(&BoxDomain::new(vec![1.0, 1.2, 0.9]).unwrap(), 120.0).unwrap();
        let m = anisotropic(0.2);
        let a = SpectralSystem::assemble(&b, &m).unwrap().stiffness.to_dense();
        let q = SpectralSystem::assemble_with(&b, &m, 12, true).unwrap().stiffness.to_dense();
        assert!((&a - &q).norm() < 1e-9 * a.norm());
    }

    #[test]
    fn constant_anisotropic_stiffness_is_symmetric() {
        let b = dirichlet_eigenbasis(&BoxDomain::cube(3, 1.0).unwrap(), 150.0).unwrap();
        let sys = SpectralSystem::assemble(&b, &anisotropic(0.3)).unwrap();
        assert!(matches!(sys.stiffness, Stiffness::Dense(_)));
        assert!(sys.stiffness.asymmetry() < 1e-10);
    }

    #[test]
    fn homogeneous_stiffness_is_diagonal_eigenvalues() {
        let b = dirichlet_eigenbasis(&BoxDomain::cube(2, 1.0).unwrap(), 100.0).unwrap();
        let sys = SpectralSystem::assemble(&b, &Medium::homogeneous(2, 2.0)).unwrap();
        let q = SpectralSystem::assemble_with(&b, &Medium::homogeneous(2, 2.0), 12, true).unwrap();
        let d = sys.stiffness.to_dense();
        assert!((&d - q.stiffness.to_dense()).norm() < 1e-9 * d.norm());
        assert!((d[(0, 0)] - 4.0 * b.eigenvalues[0]).abs() < 1e-12);
    }

    #[test]
    fn tiny_anisotropy_is_continuous() {
        let b = dirichlet_eigenbasis(&BoxDomain::cube(3, 1.0).unwrap(), 120.0).unwrap();
        let s0 = SpectralSystem::assemble(&b, &anisotropic(0.0)).unwrap();
        let s1 = SpectralSystem::assemble(&b, &anisotropic(1e-8)).unwrap();
        let init = s0.impulse(&[0.4, 0.5, 0.45], 0).unwrap();
        let dt = 1e-3;
        let a = s0.evolve(init.clone(), dt, 500, 500).unwrap();
        let c = s1.evolve(init, dt, 500, 500).unwrap();
        let (ua, uc) = (&a.last().unwrap().u, &c.last().unwrap().u);
        assert!((ua - uc).norm() < 1e-6 * ua.norm());
    }

    #[test]
    fn variable_speed_uses_quadrature_and_spatial_damping_projects() {
        let b = dirichlet_eigenbasis(&BoxDomain::cube(2, 1.0).unwrap(), 80.0).unwrap();
        let bump = GaussianBump {
            base: 1.0,
            amplitude: 0.2,
            center: vec![0.5, 0.5],
            width: 0.3,
        };
        let m = Medium::new(
            VelocityField::new(2, bump),
            DampingField::Spatial(std::sync::Arc::new(crate::medium::field::Constant(0.3))),
            AnisotropyField::Zero(2),
            0.0,
        )
        .unwrap();
        let sys = SpectralSystem::assemble(&b, &m).unwrap();
        assert!(matches!(sys.stiffness, Stiffness::Dense(_)));
        assert!(sys.c_max > 1.1);
        match &sys.damping {
            DampingMatrix::Modal(d) => {
                let p = d.nrows();
                assert!((d - DMatrix::identity(p, p) * 0.3).norm() < 1e-10);
            }
            other => panic!("unexpected damping {other:?}"),
        }
    }
}

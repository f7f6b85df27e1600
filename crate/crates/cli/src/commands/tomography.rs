//! Synthetic scattering tomography: Born data from a known perturbation,
//! least-squares inversion, reconstruction on a probe grid.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wavepath::medium::field::{Reciprocal, ScalarField};
use wavepath::medium::{FourierMode, Medium, Perturbation, RefractionDecomposition};
use wavepath::tomography::{
    born_scattered_field, coefficient_matrix, conjugate_symmetrize, l_curve, l_curve_corner, leave_one_out,
    omega_sweep, reconstruct_perturbation, solve_normal_equations, symmetry_mismatch, wavenumber_set, BornMethod,
    SurveyGeometry, TomographyConfig, WaveNumberSet,
};
use wavepath::Complex64;

use super::{CommandOutput, Context};
use crate::error::{CliError, Context as _};
use crate::output::{fmt_f64, Check};

/// One truth coefficient `Ṽ(k_j)`; its partner `Ṽ(k_{−j})` is the conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthMode {
    pub j: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyParams {
    pub k: usize,
    pub k_max: f64,
    /// Well separation of the crosswell survey.
    pub offset: f64,
    /// Extent of each well.
    pub aperture: f64,
    pub model: TomographyConfig,
    /// Truth coefficients; when absent they are drawn uniformly in
    /// `[−1, 1]` from the run seed.
    pub truth: Option<Vec<TruthMode>>,
    /// Additive complex noise with norm `noise · ‖U‖`.
    pub noise: f64,
    /// Choose `ω_reg` at the L-curve corner instead of `model.omega_reg`.
    pub l_curve: bool,
    pub sweep_points: usize,
    /// Probe points per axis of the reconstruction grid over the survey's
    /// bounding box.
    pub probe_points: usize,
    /// Write `[M]` to `coefficients.bin`.
    pub dump_matrix: bool,
    /// Largest accepted relative recovery and reconstruction errors for
    /// noiseless, unregularized runs.
    pub recovery_tol: f64,
}

impl Default for TomographyParams {
    fn default() -> Self {
        Self {
            k: 1,
            k_max: 5.0,
            offset: 2.0,
            aperture: 4.0,
            model: TomographyConfig::default(),
            truth: None,
            noise: 0.0,
            l_curve: false,
            sweep_points: 61,
            probe_points: 5,
            dump_matrix: false,
            recovery_tol: 1e-6,
        }
    }
}

fn truth_vector(p: &TomographyParams, w: &WaveNumberSet, seed: u64) -> Result<Vec<Complex64>, CliError> {
    let mut v = vec![Complex64::new(0.0, 0.0); w.len()];
    let n = w.n as i64;
    match &p.truth {
        Some(modes) => {
            for (idx, m) in modes.iter().enumerate() {
                if m.j.abs() > n {
                    return Err(CliError::config(format!("tomography.truth[{idx}].j"), format!("must lie in -{n}..={n}")));
                }
                if m.j == 0 && m.im != 0.0 {
                    return Err(CliError::config(format!("tomography.truth[{idx}].im"), "must be 0 for j = 0"));
                }
                let pos = (m.j + n) as usize;
                let z = Complex64::new(m.re, m.im);
                v[pos] = z;
                v[w.partner(pos)] = z.conj();
            }
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for j in 0..=w.n {
                let pos = w.n + j;
                let im = if j == 0 { 0.0 } else { rng.random_range(-1.0..1.0) };
                let z = Complex64::new(rng.random_range(-1.0..1.0), im);
                v[pos] = z;
                v[w.partner(pos)] = z.conj();
            }
        }
    }
    Ok(v)
}

fn probe_grid(g: &SurveyGeometry, per_axis: usize) -> Vec<Vec<f64>> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for x in g.sources.iter().chain(&g.receivers) {
        for c in 0..3 {
            lo[c] = lo[c].min(x[c]);
            hi[c] = hi[c].max(x[c]);
        }
    }
    let at = |c: usize, i: usize| {
        if per_axis == 1 {
            0.5 * (lo[c] + hi[c])
        } else {
            lo[c] + (hi[c] - lo[c]) * i as f64 / (per_axis - 1) as f64
        }
    };
    let mut pts = Vec::with_capacity(per_axis.pow(3));
    for i in 0..per_axis {
        for j in 0..per_axis {
            for k in 0..per_axis {
                pts.push(vec![at(0, i), at(1, j), at(2, k)]);
            }
        }
    }
    pts
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn run(p: &TomographyParams, medium: &Medium, ctx: &Context) -> Result<CommandOutput, CliError> {
    if medium.dim != 3 {
        return Err(CliError::config("medium.dim", "tomography needs a three-dimensional medium"));
    }
    if p.probe_points == 0 {
        return Err(CliError::config("tomography.probe_points", "must be at least 1"));
    }
    let geometry = SurveyGeometry::crosswell(p.k, p.offset, p.aperture).context("tomography")?;
    let w = wavenumber_set(p.k, p.k_max).context("tomography")?;
    // The reference index is the slowness of the medium.
    let n0: Arc<dyn ScalarField> = Arc::new(Reciprocal(medium.velocity.shared_field()));
    let mut model = p.model;
    model.validate().context("tomography.model")?;

    let truth = truth_vector(p, &w, ctx.seed)?;
    let modes: Vec<FourierMode> = w
        .vectors
        .iter()
        .zip(&truth)
        .map(|(k, v)| FourierMode { k: k.to_vec(), value: *v })
        .collect();
    let decomp = RefractionDecomposition {
        n0: n0.clone(),
        n1: Perturbation::Fourier(modes),
        epsilon: model.epsilon,
    };

    let coeffs = coefficient_matrix(&geometry, &w, &model, &n0).context("tomography")?;
    let n_side = geometry.n_side();
    let mut data = Vec::with_capacity(coeffs.rows.len());
    for &(pi, qi) in &coeffs.rows {
        let u = born_scattered_field(
            &geometry.sources[qi],
            &geometry.receivers[pi],
            &model,
            &decomp,
            &BornMethod::RayStationaryPhase,
        )
        .context("tomography.forward")?;
        data.push(u);
    }
    let mut u = DVector::from_vec(data);
    if p.noise > 0.0 {
        // Independent of the truth stream.
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        rng.set_stream(1);
        let e = DVector::from_fn(u.len(), |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        u += e.scale(p.noise * u.norm() / e.norm());
    }

    let m = &coeffs.matrix;
    let mut out = CommandOutput::default();
    if p.l_curve {
        let omegas = omega_sweep(m, p.sweep_points);
        let pts = l_curve(m, &u, &omegas).context("tomography.l_curve")?;
        let corner = l_curve_corner(&pts).ok_or_else(|| CliError::config("tomography.sweep_points", "need at least 3"))?;
        model.omega_reg = pts[corner].omega;
        let mut lw = ctx.out.csv("l-curve.csv", &["omega", "residual_norm", "solution_norm", "curvature"])?;
        for q in &pts {
            lw.write_record([fmt_f64(q.omega), fmt_f64(q.residual_norm), fmt_f64(q.solution_norm), fmt_f64(q.curvature)])?;
        }
        lw.flush().map_err(|source| CliError::Io {
            path: ctx.out.path("l-curve.csv").display().to_string(),
            source,
        })?;
        out.set("l_curve_corner", corner)?;
    }
    let sol = solve_normal_equations(m, &u, model.omega_reg).context("tomography.invert")?;
    let v: Vec<Complex64> = sol.solution.iter().cloned().collect();
    let mismatch = symmetry_mismatch(&w, &v);
    let v_sym = conjugate_symmetrize(&w, &v);
    let vt = DVector::from_vec(truth.clone());
    let recovery = (&sol.solution - &vt).norm() / vt.norm();

    let probes = probe_grid(&geometry, p.probe_points);
    let rec = reconstruct_perturbation(&w, &v_sym, &probes).context("tomography.reconstruct")?;
    let exact = reconstruct_perturbation(&w, &truth, &probes).context("tomography.reconstruct")?;
    let rec_err = rel_l2(&rec, &exact);

    let mut sw = ctx.out.csv("solution.csv", &["j", "kx", "ky", "kz", "re", "im", "true_re", "true_im"])?;
    for (pos, k) in w.vectors.iter().enumerate() {
        let j = pos as i64 - w.n as i64;
        sw.write_record([
            j.to_string(),
            fmt_f64(k[0]),
            fmt_f64(k[1]),
            fmt_f64(k[2]),
            fmt_f64(v[pos].re),
            fmt_f64(v[pos].im),
            fmt_f64(truth[pos].re),
            fmt_f64(truth[pos].im),
        ])?;
    }
    sw.flush().map_err(|source| CliError::Io {
        path: ctx.out.path("solution.csv").display().to_string(),
        source,
    })?;
    let mut rw = ctx.out.csv("reconstruction.csv", &["x", "y", "z", "value", "truth"])?;
    for ((x, a), b) in probes.iter().zip(&rec).zip(&exact) {
        rw.write_record([fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(x[2]), fmt_f64(*a), fmt_f64(*b)])?;
    }
    rw.flush().map_err(|source| CliError::Io {
        path: ctx.out.path("reconstruction.csv").display().to_string(),
        source,
    })?;
    if p.dump_matrix {
        ctx.out.complex_matrix("coefficients.bin", m)?;
    }

    out.set("k", p.k)?;
    out.set("system_size", [m.nrows(), m.ncols()])?;
    out.set("condition", sol.condition)?;
    out.set("residual", sol.residual)?;
    out.set("omega_reg", model.omega_reg)?;
    out.set("recovery_error", recovery)?;
    out.set("reconstruction_error", rec_err)?;
    out.set("symmetry_mismatch", mismatch)?;
    out.set(
        "excluded_pairs",
        coeffs
            .excluded
            .iter()
            .map(|((pi, qi), why)| serde_json::json!({ "p": pi, "q": qi, "reason": why }))
            .collect::<Vec<_>>(),
    )?;
    out.set("pairs", n_side * n_side)?;
    if model.omega_reg > 0.0 {
        let loo = leave_one_out(m, &u, model.omega_reg).context("tomography.leave_one_out")?;
        out.set("leave_one_out_max", loo.iter().cloned().fold(0.0, f64::max))?;
    }
    if p.noise == 0.0 && model.omega_reg == 0.0 {
        out.checks.push(Check::at_most("inverse-crime-recovery", recovery, p.recovery_tol));
        out.checks.push(Check::at_most("inverse-crime-reconstruction", rec_err, p.recovery_tol));
    }
    if p.noise > 0.0 {
        out.checks.push(Check::at_most("residual-within-twice-noise", sol.residual, 2.0 * p.noise));
    }
    out.checks.push(Check::at_most(
        "no-excluded-pairs",
        coeffs.excluded.len() as f64,
        0.0,
    ));
    Ok(out)
}

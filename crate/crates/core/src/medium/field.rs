//! Scalar material fields given as closed-form evaluators.
//!
//! Every field returns its value pointwise; gradients and Hessians fall back to
//! central differences unless the field overrides them analytically. Builtin
//! profiles all provide analytic derivatives.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A pure, deterministic scalar function of position.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;

    /// Step used by the finite-difference fallbacks.
    fn fd_step(&self) -> f64 {
        1e-5
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        central_gradient(|y| self.value(y), x, self.fd_step())
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let h = self.fd_step();
        let n = x.len();
        let mut out = DMatrix::zeros(n, n);
        let mut y = x.to_vec();
        for j in 0..n {
            y[j] = x[j] + h;
            let gp = self.gradient(&y);
            y[j] = x[j] - h;
            let gm = self.gradient(&y);
            y[j] = x[j];
            for i in 0..n {
                out[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        0.5 * (&out + out.transpose())
    }

    /// True when the field has the same value everywhere.
    fn is_constant(&self) -> bool {
        false
    }
}

pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            y[j] = x[j] + h;
            let fp = f(&y);
            y[j] = x[j] - h;
            let fm = f(&y);
            y[j] = x[j];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }
    fn is_constant(&self) -> bool {
        true
    }
}

/// `base + slope * x[axis]` (axis is zero-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub base: f64,
    pub slope: f64,
    pub axis: usize,
}

impl ScalarField for Linear {
    fn value(&self, x: &[f64]) -> f64 {
        self.base + self.slope * x[self.axis]
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[self.axis] = self.slope;
        g
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }
    fn is_constant(&self) -> bool {
        self.slope == 0.0
    }
}

/// `base * (1 + amplitude * exp(-|x - center|² / width²))`
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBump {
    pub base: f64,
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl GaussianBump {
    fn envelope(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        (-r2 / (self.width * self.width)).exp()
    }
}

impl ScalarField for GaussianBump {
    fn value(&self, x: &[f64]) -> f64 {
        self.base * (1.0 + self.amplitude * self.envelope(x))
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let e = self.envelope(x);
        let w2 = self.width * self.width;
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| self.base * self.amplitude * e * (-2.0 * (a - c) / w2))
            .collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let e = self.envelope(x);
        let w2 = self.width * self.width;
        let n = x.len();
        let c = self.base * self.amplitude * e;
        DMatrix::from_fn(n, n, |i, j| {
            let di = x[i] - self.center[i];
            let dj = x[j] - self.center[j];
            let delta = if i == j { 1.0 } else { 0.0 };
            c * (4.0 * di * dj / (w2 * w2) - 2.0 * delta / w2)
        })
    }
    fn is_constant(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// One term `amplitude * cos(k·x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineMode {
    pub k: Vec<f64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// `base + Σ amplitude_j cos(k_j·x + phase_j)`
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    pub base: f64,
    pub modes: Vec<CosineMode>,
}

impl CosineSeries {
    fn arg(m: &CosineMode, x: &[f64]) -> f64 {
        m.k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + m.phase
    }
}

impl ScalarField for CosineSeries {
    fn value(&self, x: &[f64]) -> f64 {
        self.base
            + self
                .modes
                .iter()
                .map(|m| m.amplitude * Self::arg(m, x).cos())
                .sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for m in &self.modes {
            let s = -m.amplitude * Self::arg(m, x).sin();
            for (gi, ki) in g.iter_mut().zip(&m.k) {
                *gi += s * ki;
            }
        }
        g
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut h = DMatrix::zeros(n, n);
        for m in &self.modes {
            let c = -m.amplitude * Self::arg(m, x).cos();
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += c * m.k[i] * m.k[j];
                }
            }
        }
        h
    }
    fn is_constant(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude == 0.0)
    }
}

/// Wraps an arbitrary closure; derivatives use central differences.
#[derive(Clone)]
pub struct FnField {
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    step: f64,
}

impl FnField {
    pub fn new(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            step: 1e-5,
        }
    }

    /// Sets the central-difference step, normally `1e-5 * domain scale`.
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("step", &self.step).finish()
    }
}

impl ScalarField for FnField {
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn fd_step(&self) -> f64 {
        self.step
    }
}

/// Interpolation order of [`GridField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Nearest,
    #[default]
    Multilinear,
}

/// Regularly sampled field with nearest or multilinear (trilinear in 3-D)
/// interpolation. Queries outside the grid are clamped to the boundary cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
    order: Interpolation,
}

impl GridField {
    /// `values` are stored with the last axis varying fastest.
    pub fn new(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
        order: Interpolation,
    ) -> crate::Result<Self> {
        let n = origin.len();
        if spacing.len() != n || shape.len() != n {
            return Err(crate::Error::Dimension {
                expected: n,
                got: spacing.len().min(shape.len()),
            });
        }
        if shape.iter().any(|&s| s < 2) || spacing.iter().any(|&h| h <= 0.0) {
            return Err(crate::Error::config(
                "grid",
                "every axis needs at least two samples and positive spacing",
            ));
        }
        let count: usize = shape.iter().product();
        if values.len() != count {
            return Err(crate::Error::config(
                "grid.values",
                format!("expected {count} samples, got {}", values.len()),
            ));
        }
        Ok(Self {
            origin,
            spacing,
            shape,
            values,
            order,
        })
    }

    /// Samples `f` on the grid.
    pub fn sample(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        order: Interpolation,
        f: impl Fn(&[f64]) -> f64,
    ) -> crate::Result<Self> {
        let n = origin.len();
        let count: usize = shape.iter().product();
        let mut values = Vec::with_capacity(count);
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        for flat in 0..count {
            let mut rem = flat;
            for d in (0..n).rev() {
                idx[d] = rem % shape[d];
                rem /= shape[d];
            }
            for d in 0..n {
                x[d] = origin[d] + spacing[d] * idx[d] as f64;
            }
            values.push(f(&x));
        }
        Self::new(origin, spacing, shape, values, order)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &s)| acc * s + i)
    }
}

impl ScalarField for GridField {
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.origin.len();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for d in 0..n {
            let u = ((x[d] - self.origin[d]) / self.spacing[d]).clamp(0.0, (self.shape[d] - 1) as f64);
            let i = (u.floor() as usize).min(self.shape[d] - 2);
            base[d] = i;
            frac[d] = u - i as f64;
        }
        match self.order {
            Interpolation::Nearest => {
                let idx: Vec<usize> = base
                    .iter()
                    .zip(&frac)
                    .map(|(&i, &f)| if f >= 0.5 { i + 1 } else { i })
                    .collect();
                self.values[self.flat(&idx)]
            }
            Interpolation::Multilinear => {
                let mut acc = 0.0;
                let mut idx = vec![0usize; n];
                for corner in 0..(1usize << n) {
                    let mut w = 1.0;
                    for d in 0..n {
                        let hi = (corner >> d) & 1 == 1;
                        idx[d] = base[d] + hi as usize;
                        w *= if hi { frac[d] } else { 1.0 - frac[d] };
                    }
                    if w != 0.0 {
                        acc += w * self.values[self.flat(&idx)];
                    }
                }
                acc
            }
        }
    }

    fn fd_step(&self) -> f64 {
        1e-5 * self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `1/f` for a positive field `f`, with analytic derivatives.
#[derive(Debug, Clone)]
pub struct Reciprocal(pub Arc<dyn ScalarField>);

impl ScalarField for Reciprocal {
    fn value(&self, x: &[f64]) -> f64 {
        1.0 / self.0.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.0.value(x);
        self.0.gradient(x).iter().map(|g| -g / (n * n)).collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.0.value(x);
        let g = nalgebra::DVector::from_vec(self.0.gradient(x));
        self.0.hessian(x) * (-1.0 / (n * n)) + (&g * g.transpose()) * (2.0 / (n * n * n))
    }

    fn is_constant(&self) -> bool {
        self.0.is_constant()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn ScalarField, x: &[f64]) {
        let g = f.gradient(x);
        let g_fd = central_gradient(|y| f.value(y), x, 1e-6);
        for (a, b) in g.iter().zip(&g_fd) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        let h = f.hessian(x);
        let n = x.len();
        let mut y = x.to_vec();
        for j in 0..n {
            y[j] = x[j] + 1e-5;
            let gp = f.gradient(&y);
            y[j] = x[j] - 1e-5;
            let gm = f.gradient(&y);
            y[j] = x[j];
            for i in 0..n {
                let fd = (gp[i] - gm[i]) / 2e-5;
                assert!((h[(i, j)] - fd).abs() < 1e-6, "H[{i},{j}] {} vs {fd}", h[(i, j)]);
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let x = [0.3, -0.2, 0.7];
        fd_check(&Linear { base: 1.0, slope: 0.1, axis: 1 }, &x);
        fd_check(
            &GaussianBump {
                base: 1.5,
                amplitude: -0.3,
                center: vec![0.1, 0.0, 0.5],
                width: 0.8,
            },
            &x,
        );
        fd_check(
            &CosineSeries {
                base: 2.0,
                modes: vec![CosineMode {
                    k: vec![1.0, 2.0, -0.5],
                    amplitude: 0.2,
                    phase: 0.3,
                }],
            },
            &x,
        );
    }

    #[test]
    fn multilinear_grid_reproduces_affine_functions() {
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - 0.5 * x[1] + 0.25 * x[2];
        let g = GridField::sample(
            vec![0.0, 0.0, 0.0],
            vec![0.5, 0.25, 1.0],
            vec![5, 9, 3],
            Interpolation::Multilinear,
            f,
        )
        .unwrap();
        for x in [[0.13, 0.77, 1.3], [1.9, 0.01, 0.5], [0.0, 2.0, 2.0]] {
            assert!((g.value(&x) - f(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest_grid_picks_closest_sample() {
        let g = GridField::new(vec![0.0], vec![1.0], vec![3], vec![10.0, 20.0, 30.0], Interpolation::Nearest)
            .unwrap();
        assert_eq!(g.value(&[0.4]), 10.0);
        assert_eq!(g.value(&[0.6]), 20.0);
        assert_eq!(g.value(&[5.0]), 30.0);
    }

    #[test]
    fn reciprocal_derivatives() {
        let n0 = Reciprocal(Arc::new(GaussianBump {
            base: 1.2,
            amplitude: 0.3,
            center: vec![0.1, 0.0, -0.2],
            width: 0.7,
        }));
        let x = [0.3, -0.2, 0.1];
        let g = n0.gradient(&x);
        let fd = central_gradient(|y| n0.value(y), &x, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

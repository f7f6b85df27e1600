//! Regularized proper-time integrals `−i ∫ ds e^{−η/s − ηs} f(s)`.
//!
//! The range `[s_min, s_max]` is split into equal panels in `v = ln s` and each
//! panel is integrated with a 7/15-point Gauss–Kronrod pair. Panels with the
//! largest error estimate are bisected until the global estimate meets the
//! tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Cutoffs, panel count, regularization and tolerance of a proper-time integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProperTimeGrid {
    pub s_min: f64,
    pub s_max: f64,
    /// Initial number of log-spaced panels.
    pub n_nodes: usize,
    pub eta: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_panels")]
    pub max_panels: usize,
}

fn default_rel_tol() -> f64 {
    1e-8
}
fn default_max_panels() -> usize {
    20_000
}

impl ProperTimeGrid {
    pub fn new(s_min: f64, s_max: f64, n_nodes: usize, eta: f64) -> Self {
        Self {
            s_min,
            s_max,
            n_nodes,
            eta,
            rel_tol: default_rel_tol(),
            max_panels: default_max_panels(),
        }
    }

    /// Defaults scaled by the travel-time scale `T = |x−x'|/C0`:
    /// `s ∈ [1e-3 T, 10 T]`, `η = 1e-2 T`.
    pub fn scaled(t_scale: f64) -> Self {
        Self::new(1e-3 * t_scale, 10.0 * t_scale, 64, 1e-2 * t_scale)
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod(g: &mut impl FnMut(f64) -> Result<Complex64>, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let f1 = g(c - h * XGK[j])?;
        let f2 = g(c + h * XGK[j])?;
        kron += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).norm();
    Ok(Panel { a, b, value, error })
}

/// `∫ ds e^{−η/s − ηs} f(s)` over `[s_min, s_max]`, without the `−i`.
pub fn regularized_integral(mut f: impl FnMut(f64) -> Complex64, grid: &ProperTimeGrid) -> Result<Complex64> {
    let ProperTimeGrid {
        s_min,
        s_max,
        n_nodes,
        eta,
        rel_tol,
        max_panels,
    } = *grid;
    if !(s_min > 0.0 && s_max > s_min) {
        return Err(Error::Domain(format!("need 0 < s_min < s_max, got [{s_min}, {s_max}]")));
    }
    if !(eta >= 0.0) {
        return Err(Error::Domain(format!("η = {eta} must be >= 0")));
    }
    let mut g = |v: f64| -> Result<Complex64> {
        let s = v.exp();
        let w = (-eta / s - eta * s).exp() * s;
        if w == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let y = f(s);
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::NonFinite { node: s });
        }
        Ok(y * w)
    };

    let (va, vb) = (s_min.ln(), s_max.ln());
    let n0 = n_nodes.max(1);
    let dv = (vb - va) / n0 as f64;
    let mut heap = BinaryHeap::with_capacity(n0 * 4);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for i in 0..n0 {
        let a = va + dv * i as f64;
        let b = if i + 1 == n0 { vb } else { va + dv * (i + 1) as f64 };
        let p = gauss_kronrod(&mut g, a, b)?;
        total += p.value;
        err += p.error;
        heap.push(p);
    }
    let mut splits = 0usize;
    while heap.len() < max_panels {
        if err <= rel_tol * total.norm() || err == 0.0 {
            break;
        }
        let p = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (p.a + p.b);
        let left = gauss_kronrod(&mut g, p.a, mid)?;
        let right = gauss_kronrod(&mut g, mid, p.b)?;
        total += left.value + right.value - p.value;
        err += left.error + right.error - p.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
        if splits.is_multiple_of(256) {
            // Refresh the running sums to keep cancellation error out of the test.
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// `−i ∫_{s_min}^{s_max} ds e^{−η/s − ηs} f(s)`; the caller takes the real part.
pub fn proper_time_quadrature(
    f: impl FnMut(f64) -> Complex64,
    s_min: f64,
    s_max: f64,
    n_nodes: usize,
    eta: f64,
) -> Result<Complex64> {
    proper_time_quadrature_on(f, &ProperTimeGrid::new(s_min, s_max, n_nodes, eta))
}

pub fn proper_time_quadrature_on(f: impl FnMut(f64) -> Complex64, grid: &ProperTimeGrid) -> Result<Complex64> {
    Ok(regularized_integral(f, grid)? * Complex64::new(0.0, -1.0))
}

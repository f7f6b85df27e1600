//! Dense rank-4 tensors in `N` dimensions, stored in index order `(i, j, k, l)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Rank-4 tensor with `n^4` entries laid out row-major over `(i, j, k, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

/// The three index symmetries of an elasticity-type tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryRelation {
    /// `T_ijkl = T_jikl`
    MinorFirstPair,
    /// `T_ijkl = T_ijlk`
    MinorSecondPair,
    /// `T_ijkl = T_klij`
    Major,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    /// `a δ_ij δ_kl + b (δ_ik δ_jl + δ_il δ_jk)`
    pub fn isotropic(n: usize, a: f64, b: f64) -> Self {
        let mut t = Self::zeros(n);
        let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = a * d(i, j) * d(k, l) + b * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                        t.set(i, j, k, l, v);
                    }
                }
            }
        }
        t
    }

    /// `δ_ik δ_jl`, the identity acting on the `(i,k)` pair for each `(j,l)`.
    pub fn scalar_acoustic(n: usize) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.set(i, j, i, j, 1.0);
            }
        }
        t
    }

    /// Builds a tensor from independent entries, writing every image under the
    /// minor and major symmetries. Later entries overwrite earlier ones.
    pub fn from_entries_symmetrized(n: usize, entries: &[([usize; 4], f64)]) -> Self {
        let mut t = Self::zeros(n);
        for &([i, j, k, l], v) in entries {
            for (a, b, c, d) in [
                (i, j, k, l),
                (j, i, k, l),
                (i, j, l, k),
                (j, i, l, k),
                (k, l, i, j),
                (l, k, i, j),
                (k, l, j, i),
                (l, k, j, i),
            ] {
                t.set(a, b, c, d, v);
            }
        }
        t
    }

    /// Raw constructor; no symmetry is imposed.
    pub fn from_entries(n: usize, entries: &[([usize; 4], f64)]) -> Self {
        let mut t = Self::zeros(n);
        for &([i, j, k, l], v) in entries {
            t.set(i, j, k, l, v);
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.offset(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let o = self.offset(i, j, k, l);
        self.data[o] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add_scaled(&self, other: &Tensor4, c: f64) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// Contraction on the 2nd and 4th indices, `A_pq = T_{p m q n} v^m v^n`.
    ///
    /// This is the `γ_ab^{jl} v_j v_l` shorthand; it reads the canonical
    /// storage directly.
    pub fn acoustic(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        debug_assert_eq!(v.len(), n);
        DMatrix::from_fn(n, n, |p, q| {
            let mut acc = 0.0;
            for m in 0..n {
                if v[m] == 0.0 {
                    continue;
                }
                for nn in 0..n {
                    acc += self.get(p, m, q, nn) * v[m] * v[nn];
                }
            }
            acc
        })
    }

    /// Largest violation of each symmetry relation, as `(relation, indices, |difference|)`
    /// for every entry exceeding `tol`.
    pub fn symmetry_violations(&self, tol: f64) -> Vec<(SymmetryRelation, [usize; 4], f64)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.get(i, j, k, l);
                        let checks = [
                            (SymmetryRelation::MinorFirstPair, self.get(j, i, k, l)),
                            (SymmetryRelation::MinorSecondPair, self.get(i, j, l, k)),
                            (SymmetryRelation::Major, self.get(k, l, i, j)),
                        ];
                        for (rel, w) in checks {
                            let d = (v - w).abs();
                            if d > tol {
                                out.push((rel, [i, j, k, l], d));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Kronecker delta as a float.
#[inline]
pub fn kron(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrized_entries_fill_all_images() {
        let t = Tensor4::from_entries_symmetrized(3, &[([0, 1, 0, 2], 1.0)]);
        assert_eq!(t.get(1, 0, 0, 2), 1.0);
        assert_eq!(t.get(0, 1, 2, 0), 1.0);
        assert_eq!(t.get(0, 2, 0, 1), 1.0);
        assert!(t.symmetry_violations(1e-12).is_empty());
    }

    #[test]
    fn acoustic_contraction_of_isotropic_tensor() {
        // (a δ_pm δ_qn + b(δ_pq δ_mn + δ_pn δ_mq)) v_m v_n = a v_p v_q + b(|v|² δ_pq + v_p v_q)
        let t = Tensor4::isotropic(3, 2.0, 0.5);
        let v = [1.0, -2.0, 0.5];
        let a = t.acoustic(&v);
        let v2: f64 = v.iter().map(|x| x * x).sum();
        for p in 0..3 {
            for q in 0..3 {
                let expect = 2.0 * v[p] * v[q] + 0.5 * (v2 * kron(p, q) + v[p] * v[q]);
                assert!((a[(p, q)] - expect).abs() < 1e-14);
            }
        }
    }
}

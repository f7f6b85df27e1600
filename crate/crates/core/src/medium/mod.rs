//! Material-property fields of a weakly anisotropic medium.
//!
//! The elasticity tensor is `C_ijkl(x) = C0²(x) δ_ik δ_jl + ε γ_ijkl(x)`, with
//! `ε` always explicit and `γ` stored unscaled in `(i, j, k, l)` order. The
//! expansion is only meaningful while `ε ‖γ‖ / C0² ≪ 1`.

pub mod field;
pub mod lame;
pub mod refraction;
pub mod scenario;
pub mod tensor;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};
pub use field::{ScalarField, Interpolation};
pub use lame::{lame_tensors_at, LameMedium};
pub use refraction::{refraction_inv_sq, FourierMode, Perturbation, RefractionDecomposition};
pub use scenario::{make_standard_medium, ScenarioDescriptor};
pub use tensor::{kron, SymmetryRelation, Tensor4};

/// Wave speed `C0(x) > 0`.
#[derive(Debug, Clone)]
pub struct VelocityField {
    dim: usize,
    field: Arc<dyn ScalarField>,
}

impl VelocityField {
    pub fn new(dim: usize, field: impl ScalarField + 'static) -> Self {
        Self {
            dim,
            field: Arc::new(field),
        }
    }

    pub fn from_arc(dim: usize, field: Arc<dyn ScalarField>) -> Self {
        Self { dim, field }
    }

    pub fn homogeneous(dim: usize, c0: f64) -> Self {
        Self::new(dim, field::Constant(c0))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn speed(&self, x: &[f64]) -> f64 {
        self.field.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.field.gradient(x)
    }

    pub fn hessian(&self, x: &[f64]) -> nalgebra::DMatrix<f64> {
        self.field.hessian(x)
    }

    pub fn is_constant(&self) -> bool {
        self.field.is_constant()
    }

    pub fn field(&self) -> &dyn ScalarField {
        self.field.as_ref()
    }

    pub fn shared_field(&self) -> Arc<dyn ScalarField> {
        self.field.clone()
    }

    /// Speed at `x`, rejecting non-positive values.
    pub fn checked_speed(&self, x: &[f64]) -> Result<f64> {
        let c = self.speed(x);
        if c > 0.0 && c.is_finite() {
            Ok(c)
        } else {
            Err(Error::InvalidMedium(format!(
                "velocity {c} at {x:?} is not positive"
            )))
        }
    }
}

/// Scalar damping `ν(x, t) ≥ 0`.
#[derive(Clone)]
pub enum DampingField {
    Zero,
    Constant(f64),
    /// Time-independent `ν(x)`.
    Spatial(Arc<dyn ScalarField>),
    SpaceTime(Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DampingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DampingField::Zero => write!(f, "Zero"),
            DampingField::Constant(v) => write!(f, "Constant({v})"),
            DampingField::Spatial(s) => write!(f, "Spatial({s:?})"),
            DampingField::SpaceTime(_) => write!(f, "SpaceTime(..)"),
        }
    }
}

impl DampingField {
    pub fn rate(&self, x: &[f64], t: f64) -> f64 {
        match self {
            DampingField::Zero => 0.0,
            DampingField::Constant(v) => *v,
            DampingField::Spatial(s) => s.value(x),
            DampingField::SpaceTime(f) => f(x, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DampingField::Zero => true,
            DampingField::Constant(v) => *v == 0.0,
            DampingField::Spatial(s) => s.is_constant() && s.value(&[0.0; 3]) == 0.0,
            DampingField::SpaceTime(_) => false,
        }
    }
}

/// Anisotropy tensor field `γ_ijkl(x)`.
#[derive(Clone)]
pub enum AnisotropyField {
    Zero(usize),
    Constant(Tensor4),
    /// `tensor * exp(-|x - center|² / width²)`
    Enveloped {
        tensor: Tensor4,
        center: Vec<f64>,
        width: f64,
    },
    Custom {
        dim: usize,
        f: Arc<dyn Fn(&[f64]) -> Tensor4 + Send + Sync>,
    },
}

impl fmt::Debug for AnisotropyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnisotropyField::Zero(n) => write!(f, "Zero({n})"),
            AnisotropyField::Constant(t) => f.debug_tuple("Constant").field(t).finish(),
            AnisotropyField::Enveloped { center, width, .. } => f
                .debug_struct("Enveloped")
                .field("center", center)
                .field("width", width)
                .finish(),
            AnisotropyField::Custom { dim, .. } => write!(f, "Custom(dim={dim})"),
        }
    }
}

impl AnisotropyField {
    pub fn dim(&self) -> usize {
        match self {
            AnisotropyField::Zero(n) => *n,
            AnisotropyField::Constant(t) => t.dim(),
            AnisotropyField::Enveloped { tensor, .. } => tensor.dim(),
            AnisotropyField::Custom { dim, .. } => *dim,
        }
    }

    pub fn tensor_at(&self, x: &[f64]) -> Tensor4 {
        match self {
            AnisotropyField::Zero(n) => Tensor4::zeros(*n),
            AnisotropyField::Constant(t) => t.clone(),
            AnisotropyField::Enveloped {
                tensor,
                center,
                width,
            } => tensor.scale(envelope(x, center, *width)),
            AnisotropyField::Custom { f, .. } => f(x),
        }
    }

    /// `∂γ_ijkl / ∂x_axis`.
    pub fn derivative(&self, x: &[f64], axis: usize) -> Tensor4 {
        match self {
            AnisotropyField::Zero(n) => Tensor4::zeros(*n),
            AnisotropyField::Constant(t) => Tensor4::zeros(t.dim()),
            AnisotropyField::Enveloped {
                tensor,
                center,
                width,
            } => {
                let e = envelope(x, center, *width);
                tensor.scale(-2.0 * (x[axis] - center[axis]) / (width * width) * e)
            }
            AnisotropyField::Custom { f, .. } => {
                let h = 1e-5;
                let mut y = x.to_vec();
                y[axis] = x[axis] + h;
                let p = f(&y);
                y[axis] = x[axis] - h;
                let m = f(&y);
                p.add_scaled(&m, -1.0).scale(0.5 / h)
            }
        }
    }

    /// True if `γ` does not depend on position.
    pub fn is_constant(&self) -> bool {
        matches!(self, AnisotropyField::Zero(_) | AnisotropyField::Constant(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            AnisotropyField::Zero(_) => true,
            AnisotropyField::Constant(t) | AnisotropyField::Enveloped { tensor: t, .. } => t.is_zero(),
            AnisotropyField::Custom { .. } => false,
        }
    }
}

fn envelope(x: &[f64], center: &[f64], width: f64) -> f64 {
    let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
    (-r2 / (width * width)).exp()
}

/// Axis-aligned bounds `[lo, hi]` per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(pub Vec<(f64, f64)>);

impl Bounds {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.0
            .iter()
            .zip(x)
            .all(|(&(lo, hi), &v)| v >= lo && v <= hi)
    }

    /// Largest side length.
    pub fn scale(&self) -> f64 {
        self.0.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
    }
}

/// A complete medium: velocity, damping, anisotropy and perturbation strength.
#[derive(Debug, Clone)]
pub struct Medium {
    pub dim: usize,
    pub velocity: VelocityField,
    pub damping: DampingField,
    pub anisotropy: AnisotropyField,
    pub epsilon: f64,
    pub domain: Option<Bounds>,
}

impl Medium {
    pub fn new(
        velocity: VelocityField,
        damping: DampingField,
        anisotropy: AnisotropyField,
        epsilon: f64,
    ) -> Result<Self> {
        let dim = velocity.dim();
        if anisotropy.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: anisotropy.dim(),
            });
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidMedium(format!("epsilon {epsilon} must be >= 0")));
        }
        Ok(Self {
            dim,
            velocity,
            damping,
            anisotropy,
            epsilon,
            domain: None,
        })
    }

    /// Lossless, isotropic, constant speed.
    pub fn homogeneous(dim: usize, c0: f64) -> Self {
        Self {
            dim,
            velocity: VelocityField::homogeneous(dim, c0),
            damping: DampingField::Zero,
            anisotropy: AnisotropyField::Zero(dim),
            epsilon: 0.0,
            domain: None,
        }
    }

    pub fn with_domain(mut self, domain: Bounds) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_anisotropy(mut self, anisotropy: AnisotropyField, epsilon: f64) -> Self {
        self.anisotropy = anisotropy;
        self.epsilon = epsilon;
        self
    }

    pub fn with_damping(mut self, damping: DampingField) -> Self {
        self.damping = damping;
        self
    }

    pub fn is_lossless(&self) -> bool {
        self.damping.is_zero()
    }

    /// Constant speed and no anisotropic contribution.
    pub fn is_homogeneous_isotropic(&self) -> bool {
        self.velocity.is_constant() && (self.epsilon == 0.0 || self.anisotropy.is_zero())
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(b) = &self.domain {
            if !b.contains(x) {
                return Err(Error::OutOfDomain {
                    position: x.to_vec(),
                });
            }
        }
        Ok(())
    }
}

/// `C_ijkl(x) = C0²(x) δ_ik δ_jl + ε γ_ijkl(x)`.
pub fn elasticity_tensor_at(medium: &Medium, x: &[f64]) -> Result<Tensor4> {
    medium.check_point(x)?;
    let c0 = medium.velocity.checked_speed(x)?;
    let base = Tensor4::scalar_acoustic(medium.dim).scale(c0 * c0);
    if medium.epsilon == 0.0 {
        return Ok(base);
    }
    Ok(base.add_scaled(&medium.anisotropy.tensor_at(x), medium.epsilon))
}

/// One symmetry violation found by [`check_symmetries`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryViolation {
    pub sample: usize,
    pub position: Vec<f64>,
    pub relation: SymmetryRelation,
    pub indices: [usize; 4],
    pub magnitude: f64,
}

/// Tolerance used by [`check_symmetries`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Checks the minor and major symmetries of `γ` at every sample point.
/// An empty report means all three relations hold to [`SYMMETRY_TOL`].
pub fn check_symmetries(gamma: &AnisotropyField, samples: &[Vec<f64>]) -> Vec<SymmetryViolation> {
    let mut report = Vec::new();
    for (s, x) in samples.iter().enumerate() {
        let t = gamma.tensor_at(x);
        for (relation, indices, magnitude) in t.symmetry_violations(SYMMETRY_TOL) {
            report.push(SymmetryViolation {
                sample: s,
                position: x.clone(),
                relation,
                indices,
                magnitude,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_case() {
        let m = Medium::homogeneous(3, 1.0);
        let c = elasticity_tensor_at(&m, &[0.2, -1.0, 4.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        assert_eq!(c.get(i, j, k, l), kron(i, k) * kron(j, l));
                    }
                }
            }
        }
    }

    #[test]
    fn speed_two_entries() {
        let m = Medium::homogeneous(3, 2.0);
        let c = elasticity_tensor_at(&m, &[0.0; 3]).unwrap();
        assert_eq!(c.get(0, 0, 0, 0), 4.0);
        assert_eq!(c.get(0, 1, 0, 1), 4.0);
        // C_1212 in one-based labels is (0,1,0,1) → δ_00 δ_11 = 1 → 4; C_1122 → 0.
        assert_eq!(c.get(0, 0, 1, 1), 0.0);
        // The mixed pair (0,1,1,0) vanishes: δ_01 δ_10 = 0.
        assert_eq!(c.get(0, 1, 1, 0), 0.0);
    }

    #[test]
    fn anisotropic_entry() {
        let g = Tensor4::from_entries_symmetrized(3, &[([0, 0, 0, 0], 3.0)]);
        let m = Medium::homogeneous(3, 1.0).with_anisotropy(AnisotropyField::Constant(g), 0.1);
        let c = elasticity_tensor_at(&m, &[0.0; 3]).unwrap();
        assert!((c.get(0, 0, 0, 0) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let m = Medium::homogeneous(2, 1.0).with_domain(Bounds(vec![(0.0, 1.0), (0.0, 1.0)]));
        assert!(matches!(
            elasticity_tensor_at(&m, &[1.5, 0.5]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(elasticity_tensor_at(&m, &[0.5, 0.5]).is_ok());
    }

    #[test]
    fn symmetry_reports() {
        let pts = vec![vec![0.0; 3], vec![1.0, 2.0, 3.0]];
        assert!(check_symmetries(&AnisotropyField::Zero(3), &pts).is_empty());
        let iso = AnisotropyField::Constant(Tensor4::isotropic(3, 1.7, -0.4));
        assert!(check_symmetries(&iso, &pts).is_empty());

        // γ_1213 = 1 alone (zero-based (0,1,0,2)) breaks every relation.
        let bad = AnisotropyField::Constant(Tensor4::from_entries(3, &[([0, 1, 0, 2], 1.0)]));
        let report = check_symmetries(&bad, &pts);
        assert!(!report.is_empty());
        for rel in [
            SymmetryRelation::MinorFirstPair,
            SymmetryRelation::MinorSecondPair,
            SymmetryRelation::Major,
        ] {
            assert!(report.iter().any(|v| v.relation == rel), "{rel:?} not reported");
        }
    }
}

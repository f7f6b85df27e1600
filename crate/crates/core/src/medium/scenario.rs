//! Builtin media described by a small TOML document.
//!
//! ```toml
//! kind = "gaussian-lens"   # homogeneous | linear-gradient | gaussian-lens | fourier-perturbed
//! dim = 3                  # default 3
//! c0 = 1.0                 # default 1.0
//! amplitude = 0.1          # gaussian-lens, default 0.0
//! center = [0.5, 0.0, 0.0] # gaussian-lens, default origin
//! width = 0.5              # gaussian-lens, default 1.0
//! epsilon = 0.0            # anisotropy strength, default 0
//! damping = 0.0            # constant ν, default 0
//!
//! [[anisotropy]]           # independent entries, one-based indices, symmetrized
//! index = [1, 1, 1, 1]
//! value = 1.0
//! ```
//!
//! `linear-gradient` reads `c0`, `g` (default 0) and a one-based `axis`
//! (default 1), giving `C0(x) = c0 + g·x_axis`. `fourier-perturbed` reads
//! `base` (default 1) and `[[modes]]` tables with `k`, `amplitude` and
//! optional `phase`, giving `C0(x) = base + Σ amplitude·cos(k·x + phase)`.
//! An optional `domain = [[lo, hi], ...]` restricts the evaluation box.

use serde::{Deserialize, Serialize};

use super::field::{Constant, CosineMode, CosineSeries, GaussianBump, Linear};
use super::{AnisotropyField, Bounds, DampingField, Medium, Tensor4, VelocityField};
use crate::{Error, Result};

fn one() -> f64 {
    1.0
}
fn three() -> usize {
    3
}
fn first_axis() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioKind {
    Homogeneous {
        #[serde(default = "one")]
        c0: f64,
    },
    LinearGradient {
        #[serde(default = "one")]
        c0: f64,
        #[serde(default)]
        g: f64,
        #[serde(default = "first_axis")]
        axis: usize,
    },
    GaussianLens {
        #[serde(default = "one")]
        c0: f64,
        #[serde(default)]
        amplitude: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default = "one")]
        width: f64,
    },
    FourierPerturbed {
        #[serde(default = "one")]
        base: f64,
        #[serde(default)]
        modes: Vec<CosineMode>,
    },
}

/// One independent anisotropy entry with one-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyEntry {
    pub index: [usize; 4],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    #[serde(default = "three")]
    pub dim: usize,
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub anisotropy: Vec<AnisotropyEntry>,
    #[serde(default)]
    pub domain: Option<Vec<(f64, f64)>>,
}

impl ScenarioDescriptor {
    pub fn homogeneous(dim: usize, c0: f64) -> Self {
        Self::of_kind(dim, ScenarioKind::Homogeneous { c0 })
    }

    pub fn of_kind(dim: usize, kind: ScenarioKind) -> Self {
        Self {
            dim,
            kind,
            epsilon: 0.0,
            damping: 0.0,
            anisotropy: Vec::new(),
            domain: None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::config("medium", e.message().to_string()))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScenarioKind::Homogeneous { .. } => "homogeneous",
            ScenarioKind::LinearGradient { .. } => "linear-gradient",
            ScenarioKind::GaussianLens { .. } => "gaussian-lens",
            ScenarioKind::FourierPerturbed { .. } => "fourier-perturbed",
        }
    }
}

/// Builds the medium named by `spec`.
pub fn make_standard_medium(spec: &ScenarioDescriptor) -> Result<Medium> {
    let n = spec.dim;
    if n == 0 {
        return Err(Error::config("medium.dim", "must be positive"));
    }
    let positive = |field: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::config(field, format!("must be positive, got {v}")))
        }
    };
    let velocity = match &spec.kind {
        ScenarioKind::Homogeneous { c0 } => {
            positive("medium.c0", *c0)?;
            VelocityField::new(n, Constant(*c0))
        }
        ScenarioKind::LinearGradient { c0, g, axis } => {
            positive("medium.c0", *c0)?;
            if *axis == 0 || *axis > n {
                return Err(Error::config("medium.axis", format!("must lie in 1..={n}")));
            }
            VelocityField::new(
                n,
                Linear {
                    base: *c0,
                    slope: *g,
                    axis: axis - 1,
                },
            )
        }
        ScenarioKind::GaussianLens {
            c0,
            amplitude,
            center,
            width,
        } => {
            positive("medium.c0", *c0)?;
            positive("medium.width", *width)?;
            if *amplitude <= -1.0 {
                return Err(Error::config("medium.amplitude", "must exceed -1"));
            }
            let center = center.clone().unwrap_or_else(|| vec![0.0; n]);
            if center.len() != n {
                return Err(Error::config("medium.center", format!("expected {n} components")));
            }
            VelocityField::new(
                n,
                GaussianBump {
                    base: *c0,
                    amplitude: *amplitude,
                    center,
                    width: *width,
                },
            )
        }
        ScenarioKind::FourierPerturbed { base, modes } => {
            positive("medium.base", *base)?;
            let total: f64 = modes.iter().map(|m| m.amplitude.abs()).sum();
            if total >= *base {
                return Err(Error::config("medium.modes", "mode amplitudes can drive the speed non-positive"));
            }
            if modes.iter().any(|m| m.k.len() != n) {
                return Err(Error::config("medium.modes.k", format!("expected {n} components")));
            }
            VelocityField::new(
                n,
                CosineSeries {
                    base: *base,
                    modes: modes.clone(),
                },
            )
        }
    };

    if spec.epsilon < 0.0 {
        return Err(Error::config("medium.epsilon", "must be >= 0"));
    }
    if spec.damping < 0.0 {
        return Err(Error::config("medium.damping", "must be >= 0"));
    }
    let mut entries = Vec::with_capacity(spec.anisotropy.len());
    for e in &spec.anisotropy {
        if e.index.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::config("medium.anisotropy.index", format!("indices must lie in 1..={n}")));
        }
        entries.push((e.index.map(|i| i - 1), e.value));
    }
    let anisotropy = if entries.is_empty() {
        AnisotropyField::Zero(n)
    } else {
        AnisotropyField::Constant(Tensor4::from_entries_symmetrized(n, &entries))
    };
    let damping = if spec.damping == 0.0 {
        DampingField::Zero
    } else {
        DampingField::Constant(spec.damping)
    };

    let mut medium = Medium::new(velocity, damping, anisotropy, spec.epsilon)?;
    if let Some(d) = &spec.domain {
        if d.len() != n || d.iter().any(|(lo, hi)| !(hi > lo)) {
            return Err(Error::config("medium.domain", "expected one increasing [lo, hi] per axis"));
        }
        medium = medium.with_domain(Bounds(d.clone()));
    }
    Ok(medium)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_build() {
        let spec = ScenarioDescriptor::from_toml_str("kind = \"linear-gradient\"\nc0 = 1\ng = 0.1\naxis = 1\n").unwrap();
        let m = make_standard_medium(&spec).unwrap();
        assert!((m.velocity.speed(&[2.0, 0.0, 0.0]) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_default() {
        let m = make_standard_medium(&ScenarioDescriptor::from_toml_str("kind = \"homogeneous\"").unwrap()).unwrap();
        assert_eq!(m.velocity.speed(&[5.0, -3.0, 1.0]), 1.0);
    }

    #[test]
    fn flat_lens_is_homogeneous() {
        let spec = ScenarioDescriptor::from_toml_str(
            "kind = \"gaussian-lens\"\nc0 = 1.5\namplitude = 0.0\nwidth = 0.3\n",
        )
        .unwrap();
        let m = make_standard_medium(&spec).unwrap();
        for x in [[0.0, 0.0, 0.0], [0.1, 0.2, -0.3], [3.0, 1.0, 0.0]] {
            assert_eq!(m.velocity.speed(&x), 1.5);
        }
    }

    #[test]
    fn unknown_kind() {
        let err = ScenarioDescriptor::from_toml_str("kind = \"crystal\"").unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn anisotropy_is_symmetrized() {
        let spec = ScenarioDescriptor::from_toml_str(
            "kind = \"homogeneous\"\nepsilon = 0.1\n[[anisotropy]]\nindex = [1, 2, 1, 3]\nvalue = 1.0\n",
        )
        .unwrap();
        let m = make_standard_medium(&spec).unwrap();
        let pts: Vec<Vec<f64>> = vec![vec![0.0; 3]];
        assert!(super::super::check_symmetries(&m.anisotropy, &pts).is_empty());
    }
}

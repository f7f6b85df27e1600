//! Proper-time path-integral propagation of waves in weakly anisotropic media.
//!
//! The crate is organised bottom-up:
//!
//! * [`medium`]: velocity, damping, anisotropy and refraction fields.
//! * [`kernels`]: closed-form short-time kernels and the homogeneous Green function.
//! * [`paths`]: discrete paths, action terms, Euclidean Monte Carlo and proper-time quadrature.
//! * [`polarization`]: ordered anisotropy factor and the factorized Green matrix.
//! * [`rays`]: shooting, two-point rays, ray action and the Van Vleck prefactor.
//! * [`spectral`]: Dirichlet-eigenbasis Galerkin solver used as a reference.
//! * [`tomography`]: first-Born scattering model and its linear inversion.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod medium;
pub mod paths;
pub mod polarization;
pub mod rays;
pub mod spectral;
pub mod stats;
pub mod tomography;

pub use error::{Error, Result};
pub use num_complex::Complex64;

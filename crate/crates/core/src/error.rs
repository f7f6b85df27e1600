use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("position {position:?} lies outside the medium domain")]
    OutOfDomain { position: Vec<f64> },

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("configuration error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular configuration: {0}")]
    Singularity(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("integrand not finite at s = {node}")]
    NonFinite { node: f64 },

    #[error("ray integration failed after sigma = {last_good_sigma}")]
    Integration { last_good_sigma: f64 },

    #[error("two-point ray did not converge: best endpoint residual {best_residual:e} after {iterations} iterations")]
    BvpFailure {
        best_residual: f64,
        iterations: usize,
    },

    #[error("conjugate point on ray: Hessian pivot block {index} has a negative eigenvalue ({eigenvalue:e})")]
    Caustic { index: usize, eigenvalue: f64 },

    #[error("source at {position:?} is on the box boundary; every Dirichlet mode vanishes there")]
    DegenerateSource { position: Vec<f64> },

    #[error("time step {dt} violates the stability bound {bound}")]
    Stability { dt: f64, bound: f64 },

    #[error("normal matrix condition number {condition:e} exceeds 1e12; set a positive regularization weight")]
    IllConditioned { condition: f64 },

    #[error("coefficients are not conjugate-symmetric (max mismatch {mismatch:e})")]
    Symmetry { mismatch: f64 },

    #[error("reconstruction has imaginary residue {residue:e}")]
    ImaginaryResidue { residue: f64 },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

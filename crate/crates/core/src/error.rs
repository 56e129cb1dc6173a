use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructor or descriptor field is out of range.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// The integration contour kept passing through a solution of `phi(z) = w`.
    #[error("contour passes through a preimage of {target} after {attempts} nudges")]
    ContourThroughZero { target: Complex64, attempts: usize },

    /// Quadtree preimage search hit the depth limit.
    #[error("preimage subdivision exceeded depth {depth} in cell r=[{r0}, {r1}], theta=[{t0}, {t1}]")]
    NonConvergence {
        depth: usize,
        r0: f64,
        r1: f64,
        t0: f64,
        t1: f64,
    },

    /// Evaluation of a symbol overflowed (atomic singular function near its singularity).
    #[error("overflow evaluating symbol at {0}")]
    Overflow(Complex64),

    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

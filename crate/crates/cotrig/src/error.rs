//! Error taxonomy shared by all modules.

/// Errors surfaced by the toolkit.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Operands have inconsistent shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix was constructed from non-finite entries.
    #[error("non-finite entry: {0}")]
    NonFiniteEntry(String),

    /// Cholesky pivot failed; carries the index of the failing pivot.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    /// Linear solve hit a pivot below the singularity threshold.
    #[error("singular matrix: pivot {pivot} has magnitude {magnitude:.3e}")]
    SingularMatrix { pivot: usize, magnitude: f64 },

    /// The factor `I - X*Y` of a controller reconstruction is numerically singular.
    #[error("singular factorization: {0}")]
    SingularFactor(String),

    /// A variable assignment does not cover the decision layout.
    #[error("assignment has {len} entries but the layout needs {expected}")]
    MissingVariable { len: usize, expected: usize },

    /// An iteration failed to converge or produced unusable numbers.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Caller-supplied argument outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The constraint system admits no solution; carries the residual of the
    /// improving-ray certificate (how exactly the ray proves infeasibility).
    #[error("infeasible (improving-ray residual {ray_residual:.3e})")]
    Infeasible { ray_residual: f64 },

    /// A design certificate check failed; names the violated item.
    #[error("verification failed: {0}")]
    VerificationFailed(String),

    /// An aggregate was requested over an empty collection.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Two campaign reports cannot be compared.
    #[error("campaign config mismatch: {0}")]
    ConfigMismatch(String),

    /// Filesystem / serialization problems (CLI layer).
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

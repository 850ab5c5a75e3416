use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input (non-fundamental discriminant, zero element, bad flag...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Argument outside the supported numeric range of a kernel.
    #[error("range error: {0}")]
    Range(String),

    /// Operation restricted to norm-Euclidean discriminants.
    #[error("unsupported discriminant: {0}")]
    UnsupportedDiscriminant(String),

    /// A series could not reach the requested tolerance within its budget.
    #[error("failed to converge: {0}")]
    Convergence(String),

    /// Cache I/O problem (corrupted entries are handled by recomputation).
    #[error("cache error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the construction and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix dimensions are inconsistent with the requested operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// A product of dimensions does not fit in the index type.
    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    /// An entry is NaN or infinite.
    #[error("non-finite entry: {0}")]
    NonFinite(String),

    /// The coefficient matrix is numerically singular.
    #[error("singular coefficient matrix: {0}")]
    Singular(String),

    /// A·conj(A) is not unitary within tolerance, or the trace
    /// normalization fails; the input does not define a valid system.
    #[error("not a Temperley-Lieb matrix: {0}")]
    NotTemperleyLieb(String),

    /// A kernel computed during the fiber recursion does not have the
    /// dimension forced by the fusion rule.
    #[error("fusion mismatch: {0}")]
    FusionMismatch(String),

    /// A size guard or the embedding memory budget was exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// A level or index lies outside the constructed truncation.
    #[error("out of range: {0}")]
    Range(String),

    /// The operation requires a specific matrix form (anti-diagonal
    /// standard form, or the m = 2 one-parameter family).
    #[error("unsupported form: {0}")]
    Form(String),

    /// A standing assumption of the construction is violated (q < 1).
    #[error("assumption violated: {0}")]
    Assumption(String),

    /// A least-squares fit degenerated (identically zero data).
    #[error("degenerate fit: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

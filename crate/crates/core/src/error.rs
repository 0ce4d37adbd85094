//! Crate-wide error type.

/// Errors reported by the landscape-lab library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Operand shapes do not conform.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A caller-supplied value violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A computation produced a NaN or infinity at the given entry.
    #[error("non-finite value at entry ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// The activation has no stored derivative table at 0.
    #[error("activation `{name}` carries no Taylor data at 0")]
    MissingTaylorData { name: String },

    /// A derivative order beyond the stored table was requested.
    #[error("derivative order {order} of `{name}` is not available (stored up to {max})")]
    UnsupportedOrder {
        name: String,
        order: usize,
        max: usize,
    },

    /// The activation's derivative table contains a zero at `order`, so the
    /// all-nonzero-derivatives condition fails there.
    #[error("activation `{name}` has a vanishing derivative at 0 of order {order}")]
    DerivativeVanishes { name: String, order: usize },

    /// No row of the input data has pairwise distinct entries.
    #[error("no input row has pairwise distinct entries")]
    DataNotDistinct,

    /// A model assumption (over-parameterization, convex loss, ...) does not
    /// hold for the supplied instance.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// An iterative routine stopped before reaching its tolerance.
    #[error("did not converge: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;

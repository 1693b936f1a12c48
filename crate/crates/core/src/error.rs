//! Shared error type for every embedding module.

use thiserror::Error;

/// Error raised by any operation in this crate.
#[derive(Debug, Clone, Error)]
pub enum MdsError {
    /// Input matrix violates a structural precondition (non-finite entries,
    /// wrong shape for the operation, asymmetry beyond tolerance).
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// A distance matrix carried the wrong scale tag for the operation.
    #[error("scale mismatch: expected {expected} distances, got {found}")]
    ScaleMismatch {
        expected: &'static str,
        found: &'static str,
    },

    /// Neighbour count outside `1..=n-1`.
    #[error("invalid k={k} for {n} points (need 1 <= k <= n-1)")]
    InvalidK { k: usize, n: usize },

    /// The neighbour graph splits into more than one connected component;
    /// geodesic distances are undefined. Carries the component partition so
    /// callers can raise `k` or keep the largest component.
    #[error("neighbour graph is disconnected into {} components (sizes: {:?})",
            components.len(),
            components.iter().map(|c| c.len()).collect::<Vec<_>>())]
    Disconnected { components: Vec<Vec<usize>> },

    /// Input is structurally valid but degenerate for the requested method
    /// (coincident points, zero-norm column, all-zero distances, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Additive constant below the PSD threshold `c*`.
    #[error("invalid correction: c_used={c_used} < c_star={c_star}")]
    InvalidCorrection { c_used: f64, c_star: f64 },

    /// An eigen/Schur routine failed to converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Dimensions of two arguments do not conform.
    #[error("shape error: {0}")]
    ShapeError(String),

    /// Requested embedding dimension exceeds what the data supports.
    #[error("invalid embedding dimension p={p} (limit {limit})")]
    InvalidDimension { p: usize, limit: usize },

    /// A requested embedding direction has a non-positive eigenvalue.
    #[error("non-embeddable direction {index}: eigenvalue {eigenvalue}")]
    NonEmbeddableDirection { index: usize, eigenvalue: f64 },

    /// Landmark count outside `1..=n`.
    #[error("invalid landmark count m={m} for {n} points")]
    InvalidM { m: usize, n: usize },

    /// Landmark block is numerically singular and the pseudo-inverse
    /// fallback was not enabled.
    #[error("landmark block is numerically singular")]
    SingularLandmarkBlock,

    /// Model container could not be read or has an unknown layout.
    #[error("model format error: {0}")]
    ModelFormat(String),

    /// The requested out-of-sample route does not apply to this model type.
    #[error("unsupported route: {0}")]
    UnsupportedRoute(String),
}

pub type Result<T> = std::result::Result<T, MdsError>;

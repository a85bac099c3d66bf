//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector/matrix dimensions do not agree with the game description.
    #[error("dimension mismatch for player {player}: {detail}")]
    DimensionMismatch { player: usize, detail: String },

    /// An index (player, component, ...) is out of range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A point violates the domain of a function (set exterior, boundary of
    /// an entropy generator, canonical domain Θ / Θ*, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The dual feasible set has no representation supporting the requested
    /// operation (e.g. Euclidean projection onto a membership-only set).
    #[error("unsupported dual-set representation: {0}")]
    UnsupportedRepresentation(String),

    /// Invalid configuration (empty E⁺ before iteration, bad step constants,
    /// malformed experiment description, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An iteration or integration produced a non-finite state.
    #[error("divergence: {0}")]
    Divergence(String),

    /// A least-squares fit was requested on a degenerate window.
    #[error("fit error: {0}")]
    Fit(String),

    /// Constant estimation failed (unbounded sets without a working box).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Search budget exceeded (brute-force oracle grid too large).
    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where a formula is valid.
    #[error("domain error: {0}")]
    Domain(String),

    /// Coincident, antipodal or otherwise degenerate geometric input.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A point or vector violates the model constraint (membership/tangency).
    #[error("model invariant violated: {0}")]
    Model(String),

    #[error("unsupported ambient: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("surface has no boundary")]
    EmptyBoundary,

    #[error("surface has a boundary, but the operation requires a closed surface")]
    NotClosed,

    #[error("point is not on the surface (distance {0:.3e})")]
    NotOnSurface(f64),

    #[error("inconsistent orientation: {0}")]
    Orientation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

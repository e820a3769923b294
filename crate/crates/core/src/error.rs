//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry construction, database handling, planning,
/// and mission execution.
#[derive(Debug, Error)]
pub enum Error {
    /// Latitude/longitude/altitude outside its legal range, or non-finite.
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),

    /// A polygon or zone geometry that violates its structural invariants.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// Input too small or too flat for the requested construction.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A parameter outside its documented domain (alpha, radius, buffer...).
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    /// Altitude-dependent geometry queried with a 2-D position.
    #[error("altitude required to evaluate {0} geometry")]
    MissingAltitude(&'static str),

    /// Malformed caller input that is not a coordinate or geometry problem.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The corridor graph does not connect start and goal.
    #[error("no path: {0}")]
    NoPath(String),

    /// Operation not legal in the engine's current phase.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Mission start position violates a zone; arming is not permitted.
    #[error("arming refused: {0}")]
    ArmingRefused(String),

    /// Malformed GeoJSON / JSON input.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// Stored digest does not match the database content.
    #[error("database integrity check failed: {0}")]
    Integrity(String),

    /// Database written by a newer, unknown format revision.
    #[error("unsupported database format version {found} (this build reads <= {supported})")]
    Version { found: u32, supported: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

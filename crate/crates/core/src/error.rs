use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("atoms {i} and {j} coincide (distance {distance:e})")]
    CoincidentAtoms { i: usize, j: usize, distance: f64 },

    #[error("invalid polarization angle {0}")]
    InvalidAngle(f64),

    #[error("Green's tensor evaluated at zero separation")]
    SingularSeparation,

    #[error("eigensolver failed: {0}")]
    NumericalFailure(String),

    #[error("state is not normalized (norm = {0})")]
    InvalidState(f64),

    #[error("lattice-sum cutoff must be at least one cell, got {0}")]
    InvalidCutoff(usize),

    #[error("bands are degenerate at k = {k}, phi = {phi} (gap {gap:e})")]
    DegenerateBands { k: f64, phi: f64, gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Crate-wide error type. Operations that can refuse an input (chart exits,
/// spectral tail overruns, malformed meshes) report the reason here rather
/// than panicking; panics are reserved for internal invariant violations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside chart domain: {0}")]
    OutsideChart(String),

    #[error("form degree {j} out of range for dimension {m}")]
    DegreeOutOfRange { j: usize, m: usize },

    #[error("operation not supported on this manifold: {0}")]
    UnsupportedManifold(String),

    #[error(
        "spectral tail estimate {tail:.3e} exceeds tolerance {tol:.3e} at t = {t:.3e}; \
         minimum reliable time for this band is ~{min_t:.3e}"
    )]
    SpectralTail { t: f64, tail: f64, tol: f64, min_t: f64 },

    #[error("mesh rejected: {0}")]
    MeshRejected(String),

    #[error("metric measure space rejected: {0}")]
    MetricSpaceRejected(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse failure: {0}")]
    Parse(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

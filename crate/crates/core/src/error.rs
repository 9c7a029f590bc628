use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix/tuple shapes do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// Invalid argument that is not a pure shape problem (bad counts, negative
    /// tolerances, out-of-range indices, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input contains NaN or infinite entries.
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    /// Polar projection of a numerically rank-deficient matrix. Carries the
    /// ratio sigma_min / sigma_max so the caller can decide what to do.
    #[error("rank-deficient polar projection (sigma_min/sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    /// The factorized-regime bound needs p >= 2d + 1.
    #[error("low-rank landscape bound not applicable: p = {p} <= 2d = {two_d}")]
    BoundNotApplicable { p: usize, two_d: usize },

    /// A point handed to a critical-point-only diagnostic is not critical.
    #[error("not a critical point: residual {residual:.3e} exceeds {tol:.3e}")]
    NotCritical { residual: f64, tol: f64 },

    /// IO failure, annotated with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// File contents did not parse as the expected format.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

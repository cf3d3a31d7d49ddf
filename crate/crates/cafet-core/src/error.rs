//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by panel construction, estimation, testing, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A block referenced by the panel contains no series.
    #[error("block {block} is empty")]
    EmptyBlock {
        /// 1-based block id.
        block: usize,
    },

    /// Panel invariant violated (missing values, bad shapes, bad block map).
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    /// Dimension mismatch between two objects that must conform.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        /// What was being checked.
        context: &'static str,
        /// Expected dimension.
        expected: usize,
        /// Actual dimension.
        actual: usize,
    },

    /// The leading r x r sub-block of the average loading matrix is
    /// numerically singular, so no rotation exists.
    #[error("rank violation: min singular value {min_singular:.3e} below {threshold:.1e}")]
    RankViolation {
        /// Smallest singular value found.
        min_singular: f64,
        /// Threshold used for the rank decision.
        threshold: f64,
    },

    /// The recursive Gram matrix is singular or numerically unusable at a
    /// forecast origin (also raised for exactly collinear regressors).
    #[error("singular Gram matrix at forecast origin {origin} (condition {condition:.3e})")]
    SingularGram {
        /// 1-based forecast origin where the failure occurred.
        origin: usize,
        /// Estimated condition number.
        condition: f64,
    },

    /// Too few observations for the requested operation.
    #[error("{context}: need at least {required} observations, got {actual}")]
    TooFewObservations {
        /// What was being computed.
        context: &'static str,
        /// Required count.
        required: usize,
        /// Actual count.
        actual: usize,
    },

    /// Invalid tuning parameters for a test statistic.
    #[error("invalid tuning: {0}")]
    InvalidTuning(String),

    /// The variance estimate is numerically zero while the numerator is not,
    /// so the statistic cannot be standardized.
    #[error("degenerate input: residual variance {phi_squared:.3e} is numerically zero")]
    DegenerateVariance {
        /// The offending variance estimate.
        phi_squared: f64,
    },

    /// Power enhancement requested for a statistic that does not admit one.
    #[error("statistic {0} does not admit a power enhancement")]
    UnsupportedEnhancement(&'static str),

    /// Forecast-error pairs that must share window bookkeeping do not.
    #[error("alignment mismatch: {0}")]
    AlignmentMismatch(String),

    /// Non-finite value where a finite one is required.
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    /// Variance-constant calibration did not converge.
    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    /// Structural problem in input data files (ragged rows, duplicate or
    /// unknown series, non-numeric cells, bad transform codes).
    #[error("data error: {0}")]
    Data(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// CSV parse/serialize failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

//! Cross-section-average factor estimation and out-of-sample accuracy tests
//! for nested factor-augmented forecasting regressions.
//!
//! The crate covers the full workflow:
//!
//! - [`panel`]: block-structured panels and cross-section-average factor
//!   proxies,
//! - [`rotation`]: the rotation/scaling device used to analyze redundant
//!   averages,
//! - [`recursive`]: expanding-window recursive least squares and nested
//!   forecast-error pairs,
//! - [`stats`]: the four accuracy/encompassing statistics, their variance
//!   estimators, power enhancements, and equivalence diagnostics,
//! - [`dgp`]: Monte Carlo designs, size/power experiment harness, and
//!   variance-constant calibration,
//! - [`diagnostics`]: factor-count selection, serial-correlation and
//!   cross-correlation pre-tests,
//! - [`pipeline`]: CSV ingestion, stationarity transforms and their
//!   inversion, imputation and outlier screening.

pub mod diagnostics;
pub mod dgp;
pub mod error;
pub mod panel;
pub mod pipeline;
pub mod recursive;
pub mod rotation;
pub mod stats;

pub use error::{Error, Result};
pub use panel::{compute_block_averages, BlockAverages, PanelDataset};
pub use recursive::{nested_error_pair, recursive_ols_errors, ForecastErrorPair};
pub use rotation::{rotation_device, transformed_factors, RotationDevice};
pub use stats::{
    equivalence_diagnostics, power_enhancement, stat_s1, stat_s2, stat_s3, stat_s4, StatId,
    TestResult, TuningParams, VarianceMode,
};

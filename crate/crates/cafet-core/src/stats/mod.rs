//! Out-of-sample forecast accuracy and encompassing statistics.
//!
//! Four one-sided tests on a nested forecast-error pair, all asymptotically
//! standard normal under the null that the factor augmentation adds nothing:
//!
//! - `s1`: split-average nesting test over the full out-of-sample window,
//! - `s2`: loss differential over two partially overlapping segments,
//! - `s3`: `s2` averaged over the long-segment endpoint,
//! - `s4`: `s2` averaged over the short-segment endpoint.
//!
//! Each statistic divides its numerator by omega_j = sqrt(theta_j * phi^2),
//! where phi^2 is the sample variance of the squared augmented-model errors
//! (or its long-run HAC analogue) and theta_j is a constant specific to the
//! statistic. The constants ship calibrated from a null Monte Carlo; an
//! exact finite-sample closed form is available as an override.

mod equivalence;
mod kernels;
pub mod variance;

pub use equivalence::{equivalence_diagnostics, EquivalenceDiagnostics};
pub use kernels::StatWeights;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::recursive::ForecastErrorPair;

pub mod constants;

/// Identifier of one of the four statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatId {
    /// Split-average forecast-nesting statistic.
    S1,
    /// Two-segment accuracy statistic.
    S2,
    /// Segment-averaged statistic, long endpoint averaged.
    S3,
    /// Segment-averaged statistic, short endpoint averaged.
    S4,
}

impl StatId {
    /// All four statistics in order.
    pub const ALL: [StatId; 4] = [StatId::S1, StatId::S2, StatId::S3, StatId::S4];

    /// Lower-case identifier used in reports and CSV output.
    pub fn as_str(&self) -> &'static str {
        match self {
            StatId::S1 => "s1",
            StatId::S2 => "s2",
            StatId::S3 => "s3",
            StatId::S4 => "s4",
        }
    }

    /// Parse an identifier such as "s1".
    pub fn parse(s: &str) -> Option<StatId> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" => Some(StatId::S1),
            "s2" => Some(StatId::S2),
            "s3" => Some(StatId::S3),
            "s4" => Some(StatId::S4),
            _ => None,
        }
    }

    /// Whether the statistic admits a power enhancement (s2-s4 do).
    pub fn admits_enhancement(&self) -> bool {
        !matches!(self, StatId::S1)
    }
}

impl std::fmt::Display for StatId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Variance estimator used in the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    /// Sample variance of the squared augmented-model errors.
    Conventional,
    /// Bartlett-kernel long-run variance of the squared errors, for
    /// multi-step horizons or serially correlated losses.
    Hac,
}

impl VarianceMode {
    /// Identifier used in CSV output.
    pub fn as_str(&self) -> &'static str {
        match self {
            VarianceMode::Conventional => "conventional",
            VarianceMode::Hac => "hac",
        }
    }

    /// Parse "conventional" or "hac".
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conventional" => Some(VarianceMode::Conventional),
            "hac" => Some(VarianceMode::Hac),
            _ => None,
        }
    }
}

/// Where the variance constants theta_j come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaSource {
    /// Constants calibrated by a null Monte Carlo and shipped in
    /// [`constants::CALIBRATED`]. Falls back to the closed form when the
    /// tuning does not match a calibrated entry.
    #[default]
    Calibrated,
    /// Exact finite-sample null variance of the unnormalized statistic,
    /// computed from the summation weights.
    ClosedForm,
}

/// Tuning parameters of the four statistics.
///
/// `mu0` splits the s1 average, `nu0` sets the averaging range of s3/s4,
/// and `lambda1`/`lambda2` fix the two segment fractions of s2 (s3 uses
/// `lambda2`, s4 uses `lambda1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningParams {
    /// Split fraction for s1, in (0,1) and not equal to 1/2.
    pub mu0: f64,
    /// Lower averaging fraction for s3/s4, in (0,1).
    pub nu0: f64,
    /// First segment fraction, in (0,1].
    pub lambda1: f64,
    /// Second segment fraction, in (0,1].
    pub lambda2: f64,
}

impl Default for TuningParams {
    fn default() -> Self {
        Self {
            mu0: 0.45,
            nu0: 0.8,
            lambda1: 1.0,
            lambda2: 0.65,
        }
    }
}

impl TuningParams {
    /// Recommended defaults for a given statistic: s2/s3 use
    /// (lambda1, lambda2) = (1, 0.65) and s4 uses (0.65, 1).
    pub fn default_for(stat: StatId) -> Self {
        match stat {
            StatId::S4 => Self {
                lambda1: 0.65,
                lambda2: 1.0,
                ..Self::default()
            },
            _ => Self::default(),
        }
    }

    /// Validate ranges; `n` checks the s1 split bounds when known.
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        if !(self.mu0 > 0.0 && self.mu0 < 1.0) || (self.mu0 - 0.5).abs() < 1e-12 {
            return Err(Error::InvalidTuning(format!(
                "mu0 must lie in (0,1) excluding 1/2, got {}",
                self.mu0
            )));
        }
        if !(self.nu0 > 0.0 && self.nu0 < 1.0) {
            return Err(Error::InvalidTuning(format!(
                "nu0 must lie in (0,1), got {}",
                self.nu0
            )));
        }
        for (name, l) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(l > 0.0 && l <= 1.0) {
                return Err(Error::InvalidTuning(format!(
                    "{name} must lie in (0,1], got {l}"
                )));
            }
        }
        if let Some(n) = n {
            let m0 = (n as f64 * self.mu0).floor() as usize;
            if m0 < 1 || n - m0 < 1 {
                return Err(Error::InvalidTuning(format!(
                    "split floor(n*mu0) = {m0} leaves an empty segment for n = {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of evaluating one statistic on an error pair.
#[derive(Debug, Clone)]
pub struct TestResult {
    /// Which statistic was computed.
    pub stat_id: StatId,
    /// Standardized statistic value.
    pub value: f64,
    /// Variance estimate omega^2 used in the denominator (zero only in the
    /// exact-cancellation case where the numerator is also zero).
    pub variance: f64,
    /// Upper-tail standard normal p-value, 1 - Phi(value).
    pub p_value: f64,
    /// Whether the power enhancement was added to the value.
    pub enhanced: bool,
    /// Variance estimator that produced `variance`.
    pub variance_mode: VarianceMode,
    /// Tuning parameters in effect.
    pub tuning: TuningParams,
}

impl TestResult {
    /// One-sided rejection at the given significance level.
    pub fn rejects(&self, level: f64) -> bool {
        self.value > one_sided_critical_value(level)
    }
}

/// Upper-tail standard normal p-value.
pub fn normal_upper_p(value: f64) -> f64 {
    let normal = Normal::standard();
    1.0 - normal.cdf(value)
}

/// One-sided critical value at significance `level` (1.6449 at 5%).
pub fn one_sided_critical_value(level: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - level)
}

/// Numerator variance threshold below which the input is degenerate.
pub const DEGENERATE_VARIANCE: f64 = 1e-14;

/// Full-control evaluation of one statistic.
pub fn evaluate_statistic(
    pair: &ForecastErrorPair,
    stat: StatId,
    tuning: &TuningParams,
    mode: VarianceMode,
    enhanced: bool,
    theta_source: ThetaSource,
) -> Result<TestResult> {
    tuning.validate(Some(pair.n))?;
    if enhanced && !stat.admits_enhancement() {
        return Err(Error::UnsupportedEnhancement(stat.as_str()));
    }
    let weights = StatWeights::build(stat, pair.n, tuning)?;
    let mut numerator = weights.unnormalized_value(pair);
    if enhanced {
        numerator += weights.unnormalized_enhancement(pair)?;
    }
    let theta = match theta_source {
        ThetaSource::Calibrated => resolve_theta(stat, tuning, &weights),
        ThetaSource::ClosedForm => weights.closed_form_theta(),
    };
    let base = variance_base(pair, mode)?;
    let omega_sq = theta * base;
    let value = if base < DEGENERATE_VARIANCE {
        if numerator.abs() < DEGENERATE_VARIANCE {
            // Exact cancellation (constant equal errors): define 0/0 = 0.
            0.0
        } else {
            return Err(Error::DegenerateVariance { phi_squared: base });
        }
    } else {
        numerator / omega_sq.sqrt()
    };
    Ok(TestResult {
        stat_id: stat,
        value,
        variance: omega_sq,
        p_value: normal_upper_p(value),
        enhanced,
        variance_mode: mode,
        tuning: *tuning,
    })
}

fn variance_base(pair: &ForecastErrorPair, mode: VarianceMode) -> Result<f64> {
    match mode {
        VarianceMode::Conventional => variance::phi_squared(&pair.u2),
        VarianceMode::Hac => {
            let squares: Vec<f64> = pair.u2.iter().map(|u| u * u).collect();
            variance::hac_long_run_variance(&squares, None)
        }
    }
}

fn resolve_theta(stat: StatId, tuning: &TuningParams, weights: &StatWeights) -> f64 {
    match constants::lookup(stat, tuning) {
        Some(theta) => theta,
        None => weights.closed_form_theta(),
    }
}

/// Theta with an explicit source selection (the override hook).
pub fn theta_constant(
    stat: StatId,
    tuning: &TuningParams,
    n: usize,
    source: ThetaSource,
) -> Result<f64> {
    let weights = StatWeights::build(stat, n, tuning)?;
    Ok(match source {
        ThetaSource::Calibrated => resolve_theta(stat, tuning, &weights),
        ThetaSource::ClosedForm => weights.closed_form_theta(),
    })
}

/// Split-average forecast-nesting statistic (no enhancement defined).
pub fn stat_s1(
    pair: &ForecastErrorPair,
    tuning: &TuningParams,
    mode: VarianceMode,
) -> Result<TestResult> {
    evaluate_statistic(pair, StatId::S1, tuning, mode, false, ThetaSource::default())
}

/// Two-segment accuracy statistic with explicit segment lengths.
pub fn stat_s2(
    pair: &ForecastErrorPair,
    l1: usize,
    l2: usize,
    mode: VarianceMode,
) -> Result<TestResult> {
    let n = pair.n as f64;
    let tuning = TuningParams {
        lambda1: l1 as f64 / n,
        lambda2: l2 as f64 / n,
        ..TuningParams::default()
    };
    let weights = StatWeights::build_s2(pair.n, l1, l2)?;
    let numerator = weights.unnormalized_value(pair);
    let theta = resolve_theta(StatId::S2, &tuning, &weights);
    let base = variance_base(pair, mode)?;
    let omega_sq = theta * base;
    let value = if base < DEGENERATE_VARIANCE {
        if numerator.abs() < DEGENERATE_VARIANCE {
            0.0
        } else {
            return Err(Error::DegenerateVariance { phi_squared: base });
        }
    } else {
        numerator / omega_sq.sqrt()
    };
    Ok(TestResult {
        stat_id: StatId::S2,
        value,
        variance: omega_sq,
        p_value: normal_upper_p(value),
        enhanced: false,
        variance_mode: mode,
        tuning,
    })
}

/// Segment-averaged statistic with the long endpoint averaged over
/// (floor(n*nu0), n].
pub fn stat_s3(
    pair: &ForecastErrorPair,
    tuning: &TuningParams,
    mode: VarianceMode,
) -> Result<TestResult> {
    evaluate_statistic(pair, StatId::S3, tuning, mode, false, ThetaSource::default())
}

/// Segment-averaged statistic with the short endpoint averaged over
/// (floor(n*nu0), n].
pub fn stat_s4(
    pair: &ForecastErrorPair,
    tuning: &TuningParams,
    mode: VarianceMode,
) -> Result<TestResult> {
    evaluate_statistic(pair, StatId::S4, tuning, mode, false, ThetaSource::default())
}

/// Non-negative power-enhancement term for s2, s3 or s4.
///
/// The enhanced statistic is the base value plus this term; it is exactly
/// zero when the two error sequences coincide.
pub fn power_enhancement(
    pair: &ForecastErrorPair,
    stat: StatId,
    tuning: &TuningParams,
    mode: VarianceMode,
) -> Result<f64> {
    if !stat.admits_enhancement() {
        return Err(Error::UnsupportedEnhancement(stat.as_str()));
    }
    tuning.validate(Some(pair.n))?;
    let weights = StatWeights::build(stat, pair.n, tuning)?;
    let delta = weights.unnormalized_enhancement(pair)?;
    let theta = resolve_theta(stat, tuning, &weights);
    let base = variance_base(pair, mode)?;
    let omega_sq = theta * base;
    if base < DEGENERATE_VARIANCE {
        if delta.abs() < DEGENERATE_VARIANCE {
            return Ok(0.0);
        }
        return Err(Error::DegenerateVariance { phi_squared: base });
    }
    Ok(delta / omega_sq.sqrt())
}

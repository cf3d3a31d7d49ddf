//! Null Monte Carlo calibration of the variance constants.
//!
//! Under u1 = u2 = iid N(0,1) the unnormalized statistic divided by phi has
//! variance theta_j. The calibration estimates that variance on a grid of
//! sample sizes and extrapolates linearly in 1/n to remove the finite-sample
//! component, producing the constants shipped in
//! [`crate::stats::constants`].

use rand_distr::{Distribution, StandardNormal};

use crate::dgp::rng;
use crate::error::{Error, Result};
use crate::recursive::ForecastErrorPair;
use crate::stats::variance::phi_squared;
use crate::stats::{evaluate_statistic, StatId, StatWeights, ThetaSource, TuningParams, VarianceMode};

/// Result of calibrating one statistic.
#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    /// Statistic calibrated.
    pub stat: StatId,
    /// Extrapolated constant theta_j.
    pub theta: f64,
    /// Per-grid-point estimates (n, theta_hat(n)).
    pub per_n: Vec<(usize, f64)>,
    /// Tuning the calibration ran at.
    pub tuning: TuningParams,
    /// Replications per grid point.
    pub reps_per_n: usize,
    /// Master seed.
    pub seed: u64,
}

/// Minimum total effective draws required for a calibration run.
pub const MIN_EFFECTIVE_DRAWS: usize = 1_000_000;

/// Maximum admissible relative spread of theta across the grid.
const MAX_RELATIVE_SPREAD: f64 = 0.2;

/// Calibrate theta_j for one statistic under the null law.
pub fn calibrate_variance_constant(
    stat: StatId,
    tuning: &TuningParams,
    reps_per_n: usize,
    n_grid: &[usize],
    seed: u64,
) -> Result<CalibrationOutcome> {
    tuning.validate(None)?;
    if n_grid.is_empty() {
        return Err(Error::CalibrationFailure("empty n grid".into()));
    }
    let effective: usize = n_grid.iter().map(|n| n * reps_per_n).sum();
    if effective < MIN_EFFECTIVE_DRAWS {
        return Err(Error::CalibrationFailure(format!(
            "need at least {MIN_EFFECTIVE_DRAWS} effective draws, got {effective}"
        )));
    }

    let mut per_n = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let weights = StatWeights::build(stat, n, tuning)?;
        let mut ratios = Vec::with_capacity(reps_per_n);
        for rep in 0..reps_per_n {
            let mut stream = rng::derive_stream(
                seed,
                &[
                    b"calibrate",
                    stat.as_str().as_bytes(),
                    &(n as u64).to_le_bytes(),
                    &(rep as u64).to_le_bytes(),
                ],
            );
            let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut stream)).collect();
            let num = weights.unnormalized_value_on(&u, &u);
            let phi2 = phi_squared(&u)?;
            ratios.push(num / phi2.sqrt());
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64;
        per_n.push((n, var));
    }

    // Least-squares fit theta(n) = theta_inf + c / n; the intercept is the
    // calibrated constant.
    let theta = if per_n.len() == 1 {
        per_n[0].1
    } else {
        let xs: Vec<f64> = per_n.iter().map(|(n, _)| 1.0 / *n as f64).collect();
        let ys: Vec<f64> = per_n.iter().map(|(_, th)| *th).collect();
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        my - slope * mx
    };

    let lo = per_n.iter().map(|(_, t)| *t).fold(f64::INFINITY, f64::min);
    let hi = per_n.iter().map(|(_, t)| *t).fold(0.0f64, f64::max);
    let mean = per_n.iter().map(|(_, t)| *t).sum::<f64>() / per_n.len() as f64;
    if theta <= 0.0 || (hi - lo) / mean > MAX_RELATIVE_SPREAD {
        return Err(Error::CalibrationFailure(format!(
            "grid estimates did not converge: spread {:.3} of mean {:.6}",
            hi - lo,
            mean
        )));
    }

    Ok(CalibrationOutcome {
        stat,
        theta,
        per_n,
        tuning: *tuning,
        reps_per_n,
        seed,
    })
}

/// Empirical one-sided rejection rate under the null u1 = u2 = iid N(0,1),
/// used as a self-consistency gate for the shipped constants.
pub fn null_rejection_rate(
    stat: StatId,
    tuning: &TuningParams,
    n: usize,
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<f64> {
    let mut rejections = 0usize;
    for rep in 0..reps {
        let mut stream = rng::derive_stream(
            seed,
            &[
                b"null_gate",
                stat.as_str().as_bytes(),
                &(rep as u64).to_le_bytes(),
            ],
        );
        let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut stream)).collect();
        let pair = ForecastErrorPair::from_errors(u.clone(), u, 3 * n, 1)?;
        let result = evaluate_statistic(
            &pair,
            stat,
            tuning,
            VarianceMode::Conventional,
            false,
            ThetaSource::Calibrated,
        )?;
        rejections += usize::from(result.rejects(level));
    }
    Ok(rejections as f64 / reps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;


    #[test]
    fn shipped_constants_agree_with_closed_form() {
        // The calibrated constants target the large-n limit of the exact
        // null variance, so at n = 10000 the two theta sources must agree
        // closely for every statistic at its default tuning.
        for stat in StatId::ALL {
            let tuning = TuningParams::default_for(stat);
            let calibrated =
                crate::stats::theta_constant(stat, &tuning, 10_000, ThetaSource::Calibrated)
                    .unwrap();
            let closed =
                crate::stats::theta_constant(stat, &tuning, 10_000, ThetaSource::ClosedForm)
                    .unwrap();
            assert!(
                (calibrated / closed - 1.0).abs() < 0.03,
                "{stat}: calibrated {calibrated:.6} vs closed form {closed:.6}"
            );
        }
    }

    #[test]
    fn standardized_statistic_has_unit_variance_on_held_out_draws() {
        // Held-out self-consistency: numerator / sqrt(theta * phi^2) should
        // have variance near one under the null.
        let n = 2000;
        let reps = 4000;
        for stat in StatId::ALL {
            let tuning = TuningParams::default_for(stat);
            let weights = StatWeights::build(stat, n, &tuning).unwrap();
            let theta =
                crate::stats::theta_constant(stat, &tuning, n, ThetaSource::Calibrated).unwrap();
            let mut vals = Vec::with_capacity(reps);
            for rep in 0..reps {
                let mut stream = rng::derive_stream(
                    991,
                    &[b"heldout", stat.as_str().as_bytes(), &(rep as u64).to_le_bytes()],
                );
                let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut stream)).collect();
                let phi2 = phi_squared(&u).unwrap();
                vals.push(weights.unnormalized_value_on(&u, &u) / (theta * phi2).sqrt());
            }
            let mean = vals.iter().sum::<f64>() / reps as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / reps as f64;
            assert!(
                (0.9..=1.1).contains(&var),
                "{stat}: held-out variance {var:.4}"
            );
        }
    }

    #[test]
    fn theta_estimates_stable_across_grid() {
        let out = calibrate_variance_constant(
            StatId::S2,
            &TuningParams::default(),
            20_000,
            &[500, 1000, 2000],
            7,
        )
        .unwrap();
        let lo = out.per_n.iter().map(|(_, t)| *t).fold(f64::INFINITY, f64::min);
        let hi = out.per_n.iter().map(|(_, t)| *t).fold(0.0f64, f64::max);
        assert!(
            (hi - lo) / out.theta < 0.05,
            "spread {:.4} vs theta {:.4}",
            hi - lo,
            out.theta
        );
    }

    #[test]
    fn insufficient_draws_fail() {
        let err = calibrate_variance_constant(
            StatId::S1,
            &TuningParams::default(),
            10,
            &[100],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::CalibrationFailure(_)));
    }

    #[test]
    fn degenerate_split_is_rejected() {
        let tuning = TuningParams {
            mu0: 0.5,
            ..TuningParams::default()
        };
        assert!(calibrate_variance_constant(StatId::S1, &tuning, 2000, &[1000], 1).is_err());
    }
}

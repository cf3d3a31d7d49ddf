//! Feasible/infeasible equivalence diagnostics.
//!
//! When the true factors are known (simulation only), the gap between the
//! statistics computed on estimated-factor errors and on true-factor errors
//! decomposes into four remainder terms, one per statistic, plus the gap
//! between the two variance estimates. All of them should shrink as the
//! panel grows; the diagnostics below evaluate them literally so that the
//! shrinkage can be checked at desk scale.

use crate::error::{Error, Result};
use crate::recursive::ForecastErrorPair;
use crate::stats::variance::phi_squared;
use crate::stats::{constants, StatId, StatWeights, TuningParams};

/// Remainder terms reconciling feasible and infeasible statistics.
#[derive(Debug, Clone)]
pub struct EquivalenceDiagnostics {
    /// Remainders for (s1, s2, s3, s4).
    pub xi: [f64; 4],
    /// Absolute gap between the infeasible and feasible variance bases.
    pub phi_gap: f64,
}

fn omega(stat: StatId, tuning: &TuningParams, n: usize, phi2: f64) -> Result<f64> {
    let theta = match constants::lookup(stat, tuning) {
        Some(t) => t,
        None => StatWeights::build(stat, n, tuning)?.closed_form_theta(),
    };
    Ok((theta * phi2).sqrt())
}

/// Evaluate the four remainder terms and the variance gap.
///
/// `infeasible` holds the error pair built from the true factors and
/// `feasible` the pair built from the block averages; both must share the
/// same window bookkeeping (k0, n, h).
pub fn equivalence_diagnostics(
    infeasible: &ForecastErrorPair,
    feasible: &ForecastErrorPair,
    tuning: &TuningParams,
) -> Result<EquivalenceDiagnostics> {
    if infeasible.k0 != feasible.k0 || infeasible.n != feasible.n || infeasible.h != feasible.h {
        return Err(Error::AlignmentMismatch(format!(
            "pairs disagree on (k0, n, h): ({}, {}, {}) vs ({}, {}, {})",
            infeasible.k0, infeasible.n, infeasible.h, feasible.k0, feasible.n, feasible.h
        )));
    }
    tuning.validate(Some(infeasible.n))?;
    let n = infeasible.n;
    let nf = n as f64;
    let rn = nf.sqrt();

    let u1 = &infeasible.u1;
    let u2_tilde = &infeasible.u2;
    let u2_hat = &feasible.u2;
    // d_t = infeasible minus feasible augmented-model error.
    let d: Vec<f64> = u2_tilde.iter().zip(u2_hat).map(|(a, b)| a - b).collect();

    let phi2_hat = phi_squared(u2_hat)?;
    let phi2_tilde = phi_squared(u2_tilde)?;
    let phi_gap = (phi2_tilde - phi2_hat).abs();
    if phi2_hat < crate::stats::DEGENERATE_VARIANCE {
        // Identical constant pairs: every remainder is exactly zero.
        if d.iter().all(|v| v.abs() < crate::stats::DEGENERATE_VARIANCE) {
            return Ok(EquivalenceDiagnostics {
                xi: [0.0; 4],
                phi_gap,
            });
        }
        return Err(Error::DegenerateVariance {
            phi_squared: phi2_hat,
        });
    }

    let m0 = (nf * tuning.mu0).floor() as usize;
    let l2 = (nf * tuning.lambda2).floor() as usize;
    let lower = (nf * tuning.nu0).floor() as usize;

    // Prefix sums of u2_tilde * d and d^2 for the segment brackets.
    let mut pref_u2d = vec![0.0; n + 1];
    let mut pref_dd = vec![0.0; n + 1];
    for t in 0..n {
        pref_u2d[t + 1] = pref_u2d[t] + u2_tilde[t] * d[t];
        pref_dd[t + 1] = pref_dd[t] + d[t] * d[t];
    }
    let bracket = |l: usize| (2.0 * pref_u2d[l] - pref_dd[l]) / rn;

    // s1 remainder: split average of u1 * d.
    let first: f64 = (0..m0).map(|t| u1[t] * d[t]).sum::<f64>() / rn;
    let rest: f64 = (m0..n).map(|t| u1[t] * d[t]).sum::<f64>() / rn;
    let omega1 = omega(StatId::S1, tuning, n, phi2_hat)?;
    let xi1 = ((nf / m0 as f64) * first + (nf / (n - m0) as f64) * rest) / (2.0 * omega1);

    // s2 remainder over the fixed short segment.
    let omega2 = omega(StatId::S2, tuning, n, phi2_hat)?;
    let xi2 = (nf / l2 as f64) * bracket(l2) / omega2;

    // s3 remainder: the same bracket scaled by the averaging weight.
    let omega3 = omega(StatId::S3, tuning, n, phi2_hat)?;
    let avg_weight = (nf - lower as f64) / (nf * (1.0 - tuning.nu0));
    let xi3 = (nf / l2 as f64) * avg_weight * bracket(l2) / omega3;

    // s4 remainder: bracket averaged over the moving endpoint.
    let omega4 = omega(StatId::S4, tuning, n, phi2_hat)?;
    let mut sum4 = 0.0;
    for l in (lower + 1)..=n {
        sum4 += (nf / l as f64) * bracket(l);
    }
    let xi4 = sum4 / (nf * (1.0 - tuning.nu0)) / omega4;

    Ok(EquivalenceDiagnostics {
        xi: [xi1, xi2, xi3, xi4],
        phi_gap,
    })
}

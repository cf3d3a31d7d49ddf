//! Shipped variance constants theta_j for the default tuning parameters.
//!
//! The denominators omega_j^2 = theta_j * phi^2 are proportional to the
//! variance of the squared-loss process, with a constant specific to each
//! statistic. The values below were produced by the null Monte Carlo
//! calibration in [`crate::dgp::calibrate`] (u1 = u2 iid standard normal,
//! extrapolated in 1/n) and can be regenerated with `cafet calibrate`.
//! For non-default tuning, evaluation falls back to the exact closed form
//! from the summation weights.

use crate::stats::{StatId, TuningParams};

/// One calibrated constant together with the tuning it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct CalibratedTheta {
    /// Statistic the constant applies to.
    pub stat: StatId,
    /// The constant theta_j.
    pub theta: f64,
    /// Tuning parameters the calibration was run at.
    pub mu0: f64,
    /// See `mu0`.
    pub nu0: f64,
    /// See `mu0`.
    pub lambda1: f64,
    /// See `mu0`.
    pub lambda2: f64,
    /// How the value was produced.
    pub provenance: &'static str,
}

/// Calibration recipe shared by all four entries.
pub const CALIBRATION_RECIPE: &str =
    "cafet calibrate --seed 20240811 --reps 60000 --n-grid 500,1000,2000 (null u1=u2 iid N(0,1), \
     theta = var(numerator/phi) extrapolated linearly in 1/n)";

/// Shipped constants for the per-statistic default tuning.
pub const CALIBRATED: [CalibratedTheta; 4] = [
    CalibratedTheta {
        stat: StatId::S1,
        theta: 1.0199713990542975e-2,
        mu0: 0.45,
        nu0: 0.8,
        lambda1: 1.0,
        lambda2: 0.65,
        provenance: CALIBRATION_RECIPE,
    },
    CalibratedTheta {
        stat: StatId::S2,
        theta: 5.3952971831360941e-1,
        mu0: 0.45,
        nu0: 0.8,
        lambda1: 1.0,
        lambda2: 0.65,
        provenance: CALIBRATION_RECIPE,
    },
    CalibratedTheta {
        stat: StatId::S3,
        theta: 3.8269547577864349e-1,
        mu0: 0.45,
        nu0: 0.8,
        lambda1: 1.0,
        lambda2: 0.65,
        provenance: CALIBRATION_RECIPE,
    },
    CalibratedTheta {
        stat: StatId::S4,
        theta: 3.8239913477746662e-1,
        mu0: 0.45,
        nu0: 0.8,
        lambda1: 0.65,
        lambda2: 1.0,
        provenance: CALIBRATION_RECIPE,
    },
];

const TUNING_TOL: f64 = 1e-9;

/// Look up a calibrated constant whose tuning matches the fields the given
/// statistic actually uses. Returns `None` when no entry matches, in which
/// case callers fall back to the closed form.
pub fn lookup(stat: StatId, tuning: &TuningParams) -> Option<f64> {
    CALIBRATED.iter().find_map(|entry| {
        if entry.stat != stat {
            return None;
        }
        let matches = match stat {
            StatId::S1 => (entry.mu0 - tuning.mu0).abs() < TUNING_TOL,
            StatId::S2 => {
                (entry.lambda1 - tuning.lambda1).abs() < TUNING_TOL
                    && (entry.lambda2 - tuning.lambda2).abs() < TUNING_TOL
            }
            StatId::S3 => {
                (entry.nu0 - tuning.nu0).abs() < TUNING_TOL
                    && (entry.lambda2 - tuning.lambda2).abs() < TUNING_TOL
            }
            StatId::S4 => {
                (entry.lambda1 - tuning.lambda1).abs() < TUNING_TOL
                    && (entry.nu0 - tuning.nu0).abs() < TUNING_TOL
            }
        };
        matches.then_some(entry.theta)
    })
}

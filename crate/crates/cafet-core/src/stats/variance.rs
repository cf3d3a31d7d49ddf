//! Variance estimators for the statistic denominators.

use crate::error::{Error, Result};

/// Sample variance of the squared residuals:
/// (1/n) * sum_t (u_t^2 - mean(u^2))^2.
pub fn phi_squared(u2: &[f64]) -> Result<f64> {
    let n = u2.len();
    if n < 2 {
        return Err(Error::TooFewObservations {
            context: "phi^2",
            required: 2,
            actual: n,
        });
    }
    let inv_n = 1.0 / n as f64;
    let mean_sq = u2.iter().map(|u| u * u).sum::<f64>() * inv_n;
    let var = u2
        .iter()
        .map(|u| {
            let d = u * u - mean_sq;
            d * d
        })
        .sum::<f64>()
        * inv_n;
    Ok(var)
}

/// Default bandwidth rule floor(1.2 * n^(1/3)).
pub fn auto_bandwidth(n: usize) -> usize {
    // cbrt is exact at perfect cubes, unlike powf(1/3).
    (1.2 * (n as f64).cbrt()).floor() as usize
}

/// Bartlett-kernel (Newey-West) long-run variance of a demeaned sequence.
///
/// `bandwidth` is the lag truncation; `None` selects floor(1.2 * n^(1/3)).
/// Bandwidth 0 reduces to the plain sample variance.
pub fn hac_long_run_variance(x: &[f64], bandwidth: Option<usize>) -> Result<f64> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("hac_long_run_variance"));
    }
    let n = x.len();
    let b = bandwidth.unwrap_or_else(|| auto_bandwidth(n));
    if n <= b {
        return Err(Error::TooFewObservations {
            context: "HAC long-run variance",
            required: b + 1,
            actual: n,
        });
    }
    if n < 2 {
        return Err(Error::TooFewObservations {
            context: "HAC long-run variance",
            required: 2,
            actual: n,
        });
    }
    let inv_n = 1.0 / n as f64;
    let mean = x.iter().sum::<f64>() * inv_n;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();

    let gamma = |k: usize| -> f64 {
        centered[k..]
            .iter()
            .zip(&centered[..n - k])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * inv_n
    };

    let mut lrv = gamma(0);
    for k in 1..=b {
        let w = 1.0 - k as f64 / (b as f64 + 1.0);
        lrv += 2.0 * w * gamma(k);
    }
    Ok(lrv)
}

//! Stationarity transforms and their inverses, one per transform code.

use crate::error::{Error, Result};

/// Differencing order consumed by each transform code.
pub fn transform_order(tcode: u8) -> usize {
    match tcode {
        1 | 4 => 0,
        2 | 5 => 1,
        3 | 6 | 7 => 2,
        _ => 0,
    }
}

fn check_tcode(tcode: u8) -> Result<()> {
    if !(1..=7).contains(&tcode) {
        return Err(Error::Data(format!("tcode must be 1..=7, got {tcode}")));
    }
    Ok(())
}

fn check_positive(series: &[f64], tcode: u8) -> Result<()> {
    if let Some(idx) = series.iter().position(|v| *v <= 0.0) {
        return Err(Error::Data(format!(
            "tcode {tcode} needs strictly positive data, first violation at index {idx} \
             (value {})",
            series[idx]
        )));
    }
    Ok(())
}

fn diff(series: &[f64]) -> Vec<f64> {
    series.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Apply a stationarity transform. The output is shorter than the input by
/// the differencing order (the consumed leading positions).
pub fn apply_transform(series: &[f64], tcode: u8) -> Result<Vec<f64>> {
    check_tcode(tcode)?;
    let order = transform_order(tcode);
    if series.len() <= order {
        return Err(Error::TooFewObservations {
            context: "transform input",
            required: order + 1,
            actual: series.len(),
        });
    }
    Ok(match tcode {
        1 => series.to_vec(),
        2 => diff(series),
        3 => diff(&diff(series)),
        4 => {
            check_positive(series, tcode)?;
            series.iter().map(|v| v.ln()).collect()
        }
        5 => {
            check_positive(series, tcode)?;
            diff(&series.iter().map(|v| v.ln()).collect::<Vec<_>>())
        }
        6 => {
            check_positive(series, tcode)?;
            diff(&diff(&series.iter().map(|v| v.ln()).collect::<Vec<_>>()))
        }
        7 => {
            check_positive(series, tcode)?;
            let pct: Vec<f64> = series.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
            diff(&pct)
        }
        _ => unreachable!(),
    })
}

/// Invert a transform given the consumed initial conditions (the first
/// `transform_order(tcode)` level values). The output has the initial
/// conditions prepended, so `invert(apply(x)) == x`.
pub fn invert_transform(transformed: &[f64], tcode: u8, initial: &[f64]) -> Result<Vec<f64>> {
    check_tcode(tcode)?;
    let order = transform_order(tcode);
    if initial.len() != order {
        return Err(Error::Data(format!(
            "tcode {tcode} needs {order} initial condition(s), got {}",
            initial.len()
        )));
    }
    let mut out = Vec::with_capacity(order + transformed.len());
    out.extend_from_slice(initial);
    match tcode {
        1 => out.extend_from_slice(transformed),
        2 => {
            let mut prev = initial[0];
            for d in transformed {
                prev += d;
                out.push(prev);
            }
        }
        3 => {
            let (mut prev2, mut prev1) = (initial[0], initial[1]);
            for d in transformed {
                let cur = 2.0 * prev1 - prev2 + d;
                out.push(cur);
                prev2 = prev1;
                prev1 = cur;
            }
        }
        4 => out.extend(transformed.iter().map(|v| v.exp())),
        5 => {
            check_positive(initial, tcode)?;
            let mut prev = initial[0];
            for d in transformed {
                prev *= d.exp();
                out.push(prev);
            }
        }
        6 => {
            check_positive(initial, tcode)?;
            let (mut l2, mut l1) = (initial[0].ln(), initial[1].ln());
            for d in transformed {
                let cur = 2.0 * l1 - l2 + d;
                out.push(cur.exp());
                l2 = l1;
                l1 = cur;
            }
        }
        7 => {
            check_positive(initial, tcode)?;
            let mut pct = initial[1] / initial[0] - 1.0;
            let mut prev = initial[1];
            for d in transformed {
                pct += d;
                prev *= 1.0 + pct;
                out.push(prev);
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

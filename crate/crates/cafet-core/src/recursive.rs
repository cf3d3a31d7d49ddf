//! Expanding-window recursive least squares and nested forecast-error pairs.
//!
//! At each forecast origin t the coefficient vector is the OLS solution on
//! all data available up to t, and the out-of-sample error is the h-step
//! forecast error at t + h. The Gram matrix is maintained with rank-1
//! Cholesky updates and refactored periodically to bound drift, which keeps
//! the per-origin cost at O(p^2) while matching a batch solve to 1e-10.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition-number ceiling beyond which the Gram matrix is treated as
/// singular.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Margin of in-sample observations required beyond the regressor count.
pub const STABILITY_MARGIN: usize = 5;

/// Steps between full Cholesky refactorizations.
const REFACTOR_EVERY: usize = 64;

/// Minimum out-of-sample length for a usable error pair: guarantees every
/// tuning-default segment floor(n * lambda) is non-empty.
pub const MIN_OUT_OF_SAMPLE: usize = 20;

/// Per-origin fit diagnostics from a recursive pass.
#[derive(Debug, Clone)]
pub struct RecursiveFitTrace {
    /// n x p matrix; row i holds the coefficients used at origin k0 + i.
    pub coefficients: DMatrix<f64>,
    /// Gram condition number at each origin.
    pub gram_condition: Vec<f64>,
}

/// Aligned out-of-sample forecast errors for a nested model pair.
#[derive(Debug, Clone)]
pub struct ForecastErrorPair {
    /// Restricted-model errors, one per forecast origin.
    pub u1: Vec<f64>,
    /// Augmented-model errors, aligned with `u1`.
    pub u2: Vec<f64>,
    /// In-sample cutoff (number of in-sample observations).
    pub k0: usize,
    /// Out-of-sample count.
    pub n: usize,
    /// Forecast horizon.
    pub h: usize,
}

impl ForecastErrorPair {
    /// Assemble a pair from aligned error sequences, enforcing the minimum
    /// out-of-sample length.
    pub fn from_errors(u1: Vec<f64>, u2: Vec<f64>, k0: usize, h: usize) -> Result<Self> {
        if u1.len() != u2.len() {
            return Err(Error::AlignmentMismatch(format!(
                "u1 has {} errors, u2 has {}",
                u1.len(),
                u2.len()
            )));
        }
        let n = u1.len();
        if n < MIN_OUT_OF_SAMPLE {
            return Err(Error::TooFewObservations {
                context: "out-of-sample window",
                required: MIN_OUT_OF_SAMPLE,
                actual: n,
            });
        }
        Ok(Self { u1, u2, k0, n, h })
    }
}

fn condition_from_eigen(gram: &DMatrix<f64>) -> f64 {
    let eig = gram.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Rank-1 Cholesky update: L <- chol(L L' + v v').
fn chol_update(l: &mut DMatrix<f64>, v: &mut DVector<f64>) {
    let p = l.nrows();
    for k in 0..p {
        let lkk = l[(k, k)];
        let r = (lkk * lkk + v[k] * v[k]).sqrt();
        let c = r / lkk;
        let s = v[k] / lkk;
        l[(k, k)] = r;
        for i in (k + 1)..p {
            l[(i, k)] = (l[(i, k)] + s * v[i]) / c;
            v[i] = c * v[i] - s * l[(i, k)];
        }
    }
}

fn solve_chol(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let p = l.nrows();
    // Forward substitution L x = b.
    let mut x = b.clone();
    for i in 0..p {
        for j in 0..i {
            let lx = l[(i, j)] * x[j];
            x[i] -= lx;
        }
        x[i] /= l[(i, i)];
    }
    // Back substitution L' beta = x.
    for i in (0..p).rev() {
        for j in (i + 1)..p {
            let lx = l[(j, i)] * x[j];
            x[i] -= lx;
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Expanding-window recursive OLS forecast errors.
///
/// Observations are 1-indexed in the time convention: `y[s-1]` is y_s and
/// row s-1 of `z` is z_s. For each origin t in k0..=T-h the coefficients
/// solve the normal equations over s = 1..=t-h regressing y_{s+h} on z_s,
/// and the recorded error is y_{t+h} - beta_t' z_t. With h = 1 this is the
/// textbook recursive scheme with sums running to t - 1.
pub fn recursive_ols_errors(
    y: &[f64],
    z: &DMatrix<f64>,
    k0: usize,
    h: usize,
) -> Result<(Vec<f64>, RecursiveFitTrace)> {
    let t_len = y.len();
    let p = z.ncols();
    if z.nrows() != t_len {
        return Err(Error::DimensionMismatch {
            context: "regressor rows vs response length",
            expected: t_len,
            actual: z.nrows(),
        });
    }
    if h == 0 {
        return Err(Error::InvalidTuning("horizon h must be >= 1".into()));
    }
    if k0 < p + STABILITY_MARGIN {
        return Err(Error::TooFewObservations {
            context: "in-sample window",
            required: p + STABILITY_MARGIN,
            actual: k0,
        });
    }
    if t_len < k0 + h {
        return Err(Error::TooFewObservations {
            context: "sample for at least one forecast origin",
            required: k0 + h,
            actual: t_len,
        });
    }
    let n = t_len - h - k0 + 1;

    // Gram and cross-moment over the initial window s = 1..=k0-h.
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for s in 0..(k0 - h) {
        let row = z.row(s);
        for a in 0..p {
            for b in a..p {
                gram[(a, b)] += row[a] * row[b];
            }
            xty[a] += row[a] * y[s + h];
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }

    let mut chol = match Cholesky::new(gram.clone()) {
        Some(c) => c.l(),
        None => {
            return Err(Error::SingularGram {
                origin: k0,
                condition: f64::INFINITY,
            })
        }
    };

    let mut errors = Vec::with_capacity(n);
    let mut coefficients = DMatrix::<f64>::zeros(n, p);
    let mut gram_condition = Vec::with_capacity(n);
    let mut update_v = DVector::<f64>::zeros(p);

    for i in 0..n {
        let t = k0 + i; // 1-indexed forecast origin
        let condition = condition_from_eigen(&gram);
        if !condition.is_finite() || condition > GRAM_CONDITION_LIMIT {
            return Err(Error::SingularGram {
                origin: t,
                condition,
            });
        }
        gram_condition.push(condition);

        let beta = solve_chol(&chol, &xty);
        let z_t = z.row(t - 1);
        let mut forecast = 0.0;
        for a in 0..p {
            coefficients[(i, a)] = beta[a];
            forecast += beta[a] * z_t[a];
        }
        errors.push(y[t + h - 1] - forecast);

        if i + 1 < n {
            // Next origin adds the in-sample point s = t - h + 1.
            let s = t - h; // 0-based row index of that point
            let row = z.row(s);
            for a in 0..p {
                update_v[a] = row[a];
                xty[a] += row[a] * y[s + h];
                for b in a..p {
                    gram[(a, b)] += row[a] * row[b];
                }
            }
            for a in 0..p {
                for b in 0..a {
                    gram[(a, b)] = gram[(b, a)];
                }
            }
            if (i + 1) % REFACTOR_EVERY == 0 {
                chol = match Cholesky::new(gram.clone()) {
                    Some(c) => c.l(),
                    None => {
                        return Err(Error::SingularGram {
                            origin: t + 1,
                            condition: f64::INFINITY,
                        })
                    }
                };
            } else {
                chol_update(&mut chol, &mut update_v);
            }
        }
    }

    Ok((
        errors,
        RecursiveFitTrace {
            coefficients,
            gram_condition,
        },
    ))
}

/// Build the aligned error pair for the nested model comparison.
///
/// The restricted model regresses on the observed predictors `w` alone; the
/// augmented model adds the factor proxies `f`. No intercept is added
/// implicitly; append a constant column to `w` if one is wanted.
pub fn nested_error_pair(
    y: &[f64],
    w: &DMatrix<f64>,
    f: &DMatrix<f64>,
    k0: usize,
    h: usize,
) -> Result<ForecastErrorPair> {
    if w.nrows() != y.len() || f.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "predictor rows vs response length",
            expected: y.len(),
            actual: w.nrows().min(f.nrows()),
        });
    }
    let mut z2 = DMatrix::<f64>::zeros(y.len(), w.ncols() + f.ncols());
    z2.view_mut((0, 0), (y.len(), w.ncols())).copy_from(w);
    z2.view_mut((0, w.ncols()), (y.len(), f.ncols())).copy_from(f);

    let (u1, _) = recursive_ols_errors(y, w, k0, h)?;
    let (u2, _) = recursive_ols_errors(y, &z2, k0, h)?;
    ForecastErrorPair::from_errors(u1, u2, k0, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rng: &mut StdRng) -> f64 {
        StandardNormal.sample(rng)
    }

    /// Independent batch oracle: fresh normal equations at a single origin.
    fn batch_beta(y: &[f64], z: &DMatrix<f64>, t: usize, h: usize) -> DVector<f64> {
        let p = z.ncols();
        let mut gram = DMatrix::<f64>::zeros(p, p);
        let mut xty = DVector::<f64>::zeros(p);
        for s in 0..(t - h) {
            let row = z.row(s).transpose();
            gram += &row * row.transpose();
            xty += row * y[s + h];
        }
        gram.try_inverse().unwrap() * xty
    }

    #[test]
    fn noiseless_linear_law_has_zero_errors() {
        // y_{t+1} = 2 z_t exactly, scalar regressor.
        let t_len = 40;
        let z = DMatrix::from_fn(t_len, 1, |t, _| (t as f64 * 0.7).sin() + 1.5);
        let mut y = vec![0.0; t_len];
        for t in 0..t_len - 1 {
            y[t + 1] = 2.0 * z[(t, 0)];
        }
        y[0] = 0.0;
        let (errors, trace) = recursive_ols_errors(&y, &z, 10, 1).unwrap();
        for (i, e) in errors.iter().enumerate() {
            assert!(e.abs() < 1e-10, "error {i} = {e}");
            assert!((trace.coefficients[(i, 0)] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_response_gives_zero_everything() {
        let z = DMatrix::from_fn(30, 2, |t, j| ((t * (j + 1)) as f64 * 0.3).cos());
        let y = vec![0.0; 30];
        let (errors, trace) = recursive_ols_errors(&y, &z, 10, 1).unwrap();
        assert!(errors.iter().all(|e| e.abs() < 1e-14));
        assert!(trace.coefficients.iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn matches_batch_oracle_at_every_origin() {
        let mut rng = StdRng::seed_from_u64(17);
        let t_len = 60;
        let p = 3;
        let z = DMatrix::from_fn(t_len, p, |_, _| randn(&mut rng));
        let y: Vec<f64> = (0..t_len).map(|_| randn(&mut rng)).collect();
        let k0 = 15;
        for h in [1usize, 3] {
            let (errors, trace) = recursive_ols_errors(&y, &z, k0, h).unwrap();
            let n = t_len - h - k0 + 1;
            assert_eq!(errors.len(), n);
            for i in 0..n {
                let t = k0 + i;
                let beta = batch_beta(&y, &z, t, h);
                for a in 0..p {
                    assert!(
                        (trace.coefficients[(i, a)] - beta[a]).abs() < 1e-10,
                        "origin {t} coef {a}: {} vs {}",
                        trace.coefficients[(i, a)],
                        beta[a]
                    );
                }
                let mut fc = 0.0;
                for a in 0..p {
                    fc += beta[a] * z[(t - 1, a)];
                }
                assert!((errors[i] - (y[t + h - 1] - fc)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn long_sample_cholesky_drift_stays_bounded() {
        // Several refactor cycles; still matches the batch oracle.
        let mut rng = StdRng::seed_from_u64(5);
        let t_len = 400;
        let z = DMatrix::from_fn(t_len, 2, |_, _| randn(&mut rng));
        let y: Vec<f64> = (0..t_len).map(|_| randn(&mut rng)).collect();
        let k0 = 20;
        let (_, trace) = recursive_ols_errors(&y, &z, k0, 1).unwrap();
        // The last origin sits several refactor cycles past the start.
        let t = t_len - 1;
        let i = t - k0;
        assert_eq!(i, trace.coefficients.nrows() - 1);
        let beta = batch_beta(&y, &z, t, 1);
        for a in 0..2 {
            assert!((trace.coefficients[(i, a)] - beta[a]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_factor_column_raises_collinearity_error() {
        let mut rng = StdRng::seed_from_u64(23);
        let t_len = 80;
        let w = DMatrix::from_fn(t_len, 1, |_, _| randn(&mut rng));
        let f = DMatrix::zeros(t_len, 1);
        let y: Vec<f64> = (0..t_len).map(|_| randn(&mut rng)).collect();
        let err = nested_error_pair(&y, &w, &f, 20, 1).unwrap_err();
        assert!(matches!(err, Error::SingularGram { .. }));
    }

    #[test]
    fn duplicated_column_raises_collinearity_error() {
        let mut rng = StdRng::seed_from_u64(29);
        let t_len = 80;
        let w = DMatrix::from_fn(t_len, 1, |_, _| randn(&mut rng));
        let f = w.clone();
        let y: Vec<f64> = (0..t_len).map(|_| randn(&mut rng)).collect();
        let err = nested_error_pair(&y, &w, &f, 20, 1).unwrap_err();
        assert!(matches!(err, Error::SingularGram { .. }));
    }

    #[test]
    fn reparameterized_factors_leave_u2_unchanged() {
        // Post-multiplying the factor proxies by any invertible B spans the
        // same column space, so the augmented-model errors are identical.
        let mut rng = StdRng::seed_from_u64(31);
        let t_len = 120;
        let w = DMatrix::from_fn(t_len, 1, |_, _| randn(&mut rng));
        let f = DMatrix::from_fn(t_len, 3, |_, _| randn(&mut rng));
        let y: Vec<f64> = (0..t_len).map(|_| randn(&mut rng)).collect();
        let b = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.5, 0.0, -1.0, 1.5, 0.25, 0.3, 0.0, -2.0],
        );
        let base = nested_error_pair(&y, &w, &f, 25, 1).unwrap();
        let rot = nested_error_pair(&y, &w, &(&f * &b), 25, 1).unwrap();
        assert_eq!(base.u1, rot.u1);
        for (a, b) in base.u2.iter().zip(rot.u2.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn short_in_sample_window_is_rejected() {
        let z = DMatrix::from_element(30, 4, 1.0);
        let y = vec![0.0; 30];
        let err = recursive_ols_errors(&y, &z, 6, 1).unwrap_err();
        assert!(matches!(err, Error::TooFewObservations { .. }));
    }
}

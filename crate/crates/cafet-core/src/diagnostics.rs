//! Pre-testing diagnostics: factor-count selection by eigenvalue ratio,
//! Ljung-Box serial-correlation tests, and residual cross-correlation
//! summaries.

use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

/// Floor applied to ratio denominators so exactly low-rank panels keep a
/// well-defined argmax.
pub const EIGEN_RATIO_FLOOR: f64 = 1e-12;

/// Outcome of the eigenvalue-ratio factor-count criterion.
#[derive(Debug, Clone)]
pub struct FactorCountEstimate {
    /// Selected factor count (argmax of the ratios, smallest-k ties).
    pub k_hat: usize,
    /// Ratios lambda_k / lambda_{k+1} for k = 1..=r_max.
    pub ratios: Vec<f64>,
    /// Leading r_max + 1 eigenvalues of the scaled covariance.
    pub eigenvalues: Vec<f64>,
}

/// Eigenvalue-ratio criterion (Ahn-Horenstein style) for the number of
/// factors.
///
/// Uses the eigenvalues of the sample covariance scaled by 1/(M*T), taken
/// from whichever Gram matrix (M x M or its T x T dual) is smaller. The
/// panel should be standardized per series; near-unit variances are checked
/// and deviations reported via the returned warning flag in debug builds
/// (the computation proceeds either way).
pub fn eigenvalue_ratio_factors(panel: &PanelDataset, r_max: usize) -> Result<FactorCountEstimate> {
    let t_len = panel.n_periods();
    let m_series = panel.n_series();
    if r_max + 1 > t_len.min(m_series) {
        return Err(Error::TooFewObservations {
            context: "eigenvalue-ratio criterion",
            required: r_max + 1,
            actual: t_len.min(m_series),
        });
    }
    let x = &panel.values;
    if x.iter().all(|v| v.abs() < 1e-300) {
        return Err(Error::InvalidPanel("all-zero panel".into()));
    }
    // Standardization is the caller's duty; warn when clearly violated.
    let mut worst: f64 = 0.0;
    for j in 0..m_series {
        let col = x.column(j);
        let mean = col.sum() / t_len as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t_len as f64;
        worst = worst.max((var - 1.0).abs());
    }
    if worst > 0.5 {
        eprintln!(
            "warning: eigenvalue-ratio criterion expects standardized series \
             (worst |variance - 1| = {worst:.3})"
        );
    }

    let scale = 1.0 / (m_series as f64 * t_len as f64);
    let gram = if m_series <= t_len {
        x.transpose() * x * scale
    } else {
        x * x.transpose() * scale
    };
    let mut eigs: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eigs.truncate(r_max + 1);

    let ratios: Vec<f64> = (0..r_max)
        .map(|k| eigs[k] / eigs[k + 1].max(EIGEN_RATIO_FLOOR))
        .collect();
    let mut k_hat = 1;
    let mut best = ratios[0];
    for (k, &ratio) in ratios.iter().enumerate().skip(1) {
        if ratio > best {
            best = ratio;
            k_hat = k + 1;
        }
    }
    Ok(FactorCountEstimate {
        k_hat,
        ratios,
        eigenvalues: eigs,
    })
}

/// Ljung-Box portmanteau test: Q = T(T+2) sum_k rho_k^2 / (T-k) with a
/// chi-square(lags) upper-tail p-value. `lags = 0` returns (0, 1).
pub fn ljung_box(series: &[f64], lags: usize) -> Result<(f64, f64)> {
    let t_len = series.len();
    if lags >= t_len.div_euclid(2) && lags > 0 {
        return Err(Error::InvalidTuning(format!(
            "need lags < T/2, got lags = {lags} for T = {t_len}"
        )));
    }
    if lags == 0 {
        return Ok((0.0, 1.0));
    }
    let mean = series.iter().sum::<f64>() / t_len as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var: f64 = centered.iter().map(|v| v * v).sum();
    if var < 1e-300 {
        return Err(Error::InvalidPanel("zero-variance series".into()));
    }
    let mut q = 0.0;
    for k in 1..=lags {
        let cov: f64 = centered[k..]
            .iter()
            .zip(&centered[..t_len - k])
            .map(|(a, b)| a * b)
            .sum();
        let rho = cov / var;
        q += rho * rho / (t_len - k) as f64;
    }
    q *= t_len as f64 * (t_len + 2) as f64;
    let chi = ChiSquared::new(lags as f64).expect("positive dof");
    let p = 1.0 - chi.cdf(q);
    Ok((q, p))
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(series: &[f64]) -> f64 {
    let t_len = series.len();
    let mean = series.iter().sum::<f64>() / t_len as f64;
    let var: f64 = series.iter().map(|v| (v - mean).powi(2)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = (1..t_len)
        .map(|t| (series[t] - mean) * (series[t - 1] - mean))
        .sum();
    cov / var
}

/// Per-series Ljung-Box results plus the summary over significant series.
#[derive(Debug, Clone)]
pub struct SerialCorrelationReport {
    /// Per series: (Q statistic, p-value, lag-1 autocorrelation).
    pub per_series: Vec<(f64, f64, f64)>,
    /// Mean lag-1 autocorrelation over series significant at 5%.
    pub mean_sc: f64,
    /// Mean absolute lag-1 autocorrelation over series significant at 5%.
    pub mean_abs_sc: f64,
}

/// Run Ljung-Box on every column of a residual panel and summarize the
/// lag-1 autocorrelations of the series that reject at 5%.
pub fn serial_correlation_report(residuals: &DMatrix<f64>, lags: usize) -> Result<SerialCorrelationReport> {
    let mut per_series = Vec::with_capacity(residuals.ncols());
    let mut sig = Vec::new();
    for j in 0..residuals.ncols() {
        let col: Vec<f64> = residuals.column(j).iter().copied().collect();
        let (q, p) = ljung_box(&col, lags)?;
        let rho1 = lag1_autocorrelation(&col);
        if p < 0.05 {
            sig.push(rho1);
        }
        per_series.push((q, p, rho1));
    }
    let (mean_sc, mean_abs_sc) = if sig.is_empty() {
        (0.0, 0.0)
    } else {
        let k = sig.len() as f64;
        (
            sig.iter().sum::<f64>() / k,
            sig.iter().map(|v| v.abs()).sum::<f64>() / k,
        )
    };
    Ok(SerialCorrelationReport {
        per_series,
        mean_sc,
        mean_abs_sc,
    })
}

/// Mean and mean-absolute pairwise correlation of a residual panel.
#[derive(Debug, Clone, Copy)]
pub struct CrossCorrelationSummary {
    /// Average pairwise correlation.
    pub mean_xc: f64,
    /// Average absolute pairwise correlation.
    pub mean_abs_xc: f64,
    /// Pairs excluded because a member column was constant.
    pub excluded_pairs: usize,
}

/// All M(M-1)/2 pairwise sample correlations, unthresholded. Pairs touching
/// a constant column are excluded and counted.
pub fn cross_correlation_summary(residuals: &DMatrix<f64>) -> Result<CrossCorrelationSummary> {
    let m_series = residuals.ncols();
    if m_series < 2 {
        return Err(Error::TooFewObservations {
            context: "cross-correlation summary",
            required: 2,
            actual: m_series,
        });
    }
    let t_len = residuals.nrows();
    let mut centered = residuals.clone();
    let mut norms = vec![0.0f64; m_series];
    for j in 0..m_series {
        let mean = centered.column(j).sum() / t_len as f64;
        for t in 0..t_len {
            centered[(t, j)] -= mean;
        }
        norms[j] = centered.column(j).norm();
    }
    let mut sum = 0.0;
    let mut sum_abs = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for a in 0..m_series {
        for b in (a + 1)..m_series {
            if norms[a] < 1e-150 || norms[b] < 1e-150 {
                excluded += 1;
                continue;
            }
            let corr = centered.column(a).dot(&centered.column(b)) / (norms[a] * norms[b]);
            sum += corr;
            sum_abs += corr.abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::InvalidPanel(
            "no usable pairs: all columns constant".into(),
        ));
    }
    Ok(CrossCorrelationSummary {
        mean_xc: sum / used as f64,
        mean_abs_xc: sum_abs / used as f64,
        excluded_pairs: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PanelDataset;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rng: &mut StdRng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn standardize(x: &mut DMatrix<f64>) {
        let t_len = x.nrows();
        for j in 0..x.ncols() {
            let mean = x.column(j).sum() / t_len as f64;
            let var = x.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t_len as f64;
            let sd = var.sqrt().max(1e-12);
            for t in 0..t_len {
                x[(t, j)] = (x[(t, j)] - mean) / sd;
            }
        }
    }

    #[test]
    fn rank_one_panel_selects_one_factor() {
        let mut rng = StdRng::seed_from_u64(1);
        let (t_len, m_series) = (200, 60);
        let f: Vec<f64> = (0..t_len).map(|_| StandardNormal.sample(&mut rng)).collect();
        let loading: Vec<f64> = (0..m_series).map(|_| rng.random_range(0.5..1.5)).collect();
        let mut x = DMatrix::from_fn(t_len, m_series, |t, j| {
            loading[j] * f[t] + 1e-3 * randn(&mut rng)
        });
        standardize(&mut x);
        let panel = PanelDataset::from_values(x, vec![1; m_series]).unwrap();
        let est = eigenvalue_ratio_factors(&panel, 8).unwrap();
        assert_eq!(est.k_hat, 1);
    }

    #[test]
    fn exact_rank_two_noiseless_panel_selects_two() {
        let mut rng = StdRng::seed_from_u64(2);
        let (t_len, m_series) = (100, 30);
        let f1: Vec<f64> = (0..t_len).map(|_| StandardNormal.sample(&mut rng)).collect();
        let f2: Vec<f64> = (0..t_len).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = DMatrix::from_fn(t_len, m_series, |t, j| {
            (1.0 + j as f64 / 10.0) * f1[t] + ((j % 7) as f64 - 3.0) * f2[t]
        });
        let panel = PanelDataset::from_values(x, vec![1; m_series]).unwrap();
        let est = eigenvalue_ratio_factors(&panel, 6).unwrap();
        // The zero tail is floored, so the k = 2 ratio dominates.
        assert_eq!(est.k_hat, 2);
    }

    #[test]
    fn er_is_scale_invariant_and_permutation_invariant() {
        let mut rng = StdRng::seed_from_u64(3);
        let x = DMatrix::from_fn(80, 12, |_, _| randn(&mut rng));
        let panel = PanelDataset::from_values(x.clone(), vec![1; 12]).unwrap();
        let base = eigenvalue_ratio_factors(&panel, 5).unwrap();

        let scaled = PanelDataset::from_values(&x * 3.7, vec![1; 12]).unwrap();
        let s = eigenvalue_ratio_factors(&scaled, 5).unwrap();
        for (a, b) in base.ratios.iter().zip(&s.ratios) {
            assert!((a - b).abs() < 1e-9);
        }

        let mut perm = x.clone();
        perm.swap_columns(0, 7);
        perm.swap_columns(3, 11);
        let p = PanelDataset::from_values(perm, vec![1; 12]).unwrap();
        let est = eigenvalue_ratio_factors(&p, 5).unwrap();
        assert_eq!(est.k_hat, base.k_hat);
    }

    #[test]
    fn ljung_box_zero_lags() {
        let x: Vec<f64> = (0..50).map(|t| (t as f64).sin()).collect();
        assert_eq!(ljung_box(&x, 0).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn ljung_box_detects_ar1() {
        let mut rng = StdRng::seed_from_u64(4);
        let mut x = vec![0.0f64; 500];
        for t in 1..500 {
            x[t] = 0.5 * x[t - 1] + randn(&mut rng);
        }
        let (_, p) = ljung_box(&x, 1).unwrap();
        assert!(p < 0.01, "p = {p}");
    }

    #[test]
    fn ljung_box_is_affine_invariant() {
        let mut rng = StdRng::seed_from_u64(5);
        let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 5.0 - 3.0 * v).collect();
        let (qx, _) = ljung_box(&x, 6).unwrap();
        let (qy, _) = ljung_box(&y, 6).unwrap();
        assert!((qx - qy).abs() < 1e-9);
    }

    #[test]
    fn ljung_box_null_rejection_rate_is_nominal() {
        let mut rejections = 0usize;
        let trials = 1000;
        for seed in 0..trials {
            let mut rng = StdRng::seed_from_u64(seed as u64);
            let x: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (_, p) = ljung_box(&x, 10).unwrap();
            rejections += usize::from(p < 0.05);
        }
        let rate = rejections as f64 / trials as f64;
        assert!((0.03..=0.07).contains(&rate), "rate = {rate}");
    }

    #[test]
    fn cross_correlation_independent_columns_is_small() {
        let mut rng = StdRng::seed_from_u64(6);
        let x = DMatrix::from_fn(5000, 10, |_, _| randn(&mut rng));
        let s = cross_correlation_summary(&x).unwrap();
        assert!(s.mean_abs_xc < 0.03, "mean_abs_xc = {}", s.mean_abs_xc);
    }

    #[test]
    fn identical_columns_have_unit_correlation() {
        let mut rng = StdRng::seed_from_u64(7);
        let col: Vec<f64> = (0..40).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = DMatrix::from_fn(40, 2, |t, _| col[t]);
        let s = cross_correlation_summary(&x).unwrap();
        assert!((s.mean_xc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn common_factor_panel_is_strongly_correlated() {
        let mut rng = StdRng::seed_from_u64(8);
        let f: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = DMatrix::from_fn(300, 8, |t, _| {
            f[t] + 1e-2 * randn(&mut rng)
        });
        let s = cross_correlation_summary(&x).unwrap();
        assert!(s.mean_xc > 0.9);
    }

    #[test]
    fn constant_column_pairs_are_excluded_and_counted() {
        let mut rng = StdRng::seed_from_u64(9);
        let mut x = DMatrix::from_fn(30, 3, |_, _| randn(&mut rng));
        for t in 0..30 {
            x[(t, 1)] = 4.0;
        }
        let s = cross_correlation_summary(&x).unwrap();
        assert_eq!(s.excluded_pairs, 2);
    }
}

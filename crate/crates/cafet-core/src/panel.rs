//! Panel data model and cross-section-average factor estimation.
//!
//! A panel is a T x M matrix of observations (rows = time, columns = series)
//! together with a partition of the series into m blocks. The latent factors
//! are estimated by the per-block cross-section averages, one column per
//! block.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A complete balanced panel with block structure.
///
/// Invariants enforced on construction:
/// - every series belongs to exactly one block and every block 1..=m is
///   non-empty,
/// - no missing (non-finite) entries,
/// - T >= 2 and M >= m >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    /// T x M observation matrix, rows = time.
    pub values: DMatrix<f64>,
    /// Block id (1-based, in 1..=m) for each series/column.
    pub block_of: Vec<usize>,
    /// Series identifiers, one per column.
    pub series_names: Vec<String>,
    /// Period labels, one per row.
    pub time_index: Vec<String>,
    n_blocks: usize,
}

impl PanelDataset {
    /// Build a panel, validating all structural invariants.
    pub fn new(
        values: DMatrix<f64>,
        block_of: Vec<usize>,
        series_names: Vec<String>,
        time_index: Vec<String>,
    ) -> Result<Self> {
        let (t, m_series) = (values.nrows(), values.ncols());
        if t < 2 {
            return Err(Error::InvalidPanel(format!("need T >= 2, got T = {t}")));
        }
        if m_series == 0 {
            return Err(Error::InvalidPanel("panel has no series".into()));
        }
        if block_of.len() != m_series {
            return Err(Error::DimensionMismatch {
                context: "block map",
                expected: m_series,
                actual: block_of.len(),
            });
        }
        if series_names.len() != m_series {
            return Err(Error::DimensionMismatch {
                context: "series names",
                expected: m_series,
                actual: series_names.len(),
            });
        }
        if time_index.len() != t {
            return Err(Error::DimensionMismatch {
                context: "time index",
                expected: t,
                actual: time_index.len(),
            });
        }
        let n_blocks = *block_of.iter().max().unwrap_or(&0);
        if n_blocks == 0 {
            return Err(Error::InvalidPanel("block ids must be >= 1".into()));
        }
        if m_series < n_blocks {
            return Err(Error::InvalidPanel(format!(
                "need M >= m, got M = {m_series}, m = {n_blocks}"
            )));
        }
        let mut seen = vec![false; n_blocks];
        for &b in &block_of {
            if b == 0 || b > n_blocks {
                return Err(Error::InvalidPanel(format!("block id {b} out of range")));
            }
            seen[b - 1] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::EmptyBlock { block: empty + 1 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel(
                "panel contains missing or non-finite entries".into(),
            ));
        }
        Ok(Self {
            values,
            block_of,
            series_names,
            time_index,
            n_blocks,
        })
    }

    /// Build a panel with generated names ("b{j}_s{i}") and time labels.
    pub fn from_values(values: DMatrix<f64>, block_of: Vec<usize>) -> Result<Self> {
        let mut counts = vec![0usize; block_of.iter().copied().max().unwrap_or(0)];
        let names = block_of
            .iter()
            .map(|&b| {
                let c = counts.get_mut(b.saturating_sub(1)).map_or(0, |c| {
                    *c += 1;
                    *c
                });
                format!("b{b}_s{c}")
            })
            .collect();
        let time = (1..=values.nrows()).map(|t| t.to_string()).collect();
        Self::new(values, block_of, names, time)
    }

    /// Number of time periods T.
    pub fn n_periods(&self) -> usize {
        self.values.nrows()
    }

    /// Number of series M.
    pub fn n_series(&self) -> usize {
        self.values.ncols()
    }

    /// Number of blocks m.
    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    /// Column indices of the series in block `block` (1-based block id).
    pub fn block_members(&self, block: usize) -> Vec<usize> {
        self.block_of
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == block).then_some(i))
            .collect()
    }
}

/// The T x m matrix of per-block cross-section averages.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAverages {
    /// T x m matrix; column j holds the block-(j+1) averages over time.
    pub f_hat: DMatrix<f64>,
    /// Number of blocks m.
    pub m: usize,
}

/// Neumaier-compensated sum; keeps block means exact enough for the
/// 1e-12 oracle comparisons on long panels.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Estimate the latent factors by block cross-section averages.
///
/// Column j of the result at time t is the arithmetic mean over all series
/// of block j at time t. Pure function; the input panel is not modified.
pub fn compute_block_averages(panel: &PanelDataset) -> Result<BlockAverages> {
    let t_len = panel.n_periods();
    let m = panel.n_blocks();
    let mut f_hat = DMatrix::<f64>::zeros(t_len, m);
    for block in 1..=m {
        let members = panel.block_members(block);
        if members.is_empty() {
            return Err(Error::EmptyBlock { block });
        }
        let inv_n = 1.0 / members.len() as f64;
        for t in 0..t_len {
            let s = compensated_sum(members.iter().map(|&j| panel.values[(t, j)]));
            f_hat[(t, block - 1)] = s * inv_n;
        }
    }
    Ok(BlockAverages { f_hat, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn toy_panel(t_len: usize, block_of: Vec<usize>, fill: impl Fn(usize, usize) -> f64) -> PanelDataset {
        let m_series = block_of.len();
        let values = DMatrix::from_fn(t_len, m_series, |t, j| fill(t, j));
        PanelDataset::from_values(values, block_of).unwrap()
    }

    #[test]
    fn constant_blocks_average_to_constants() {
        // Every series in block j equals j as a constant.
        let panel = toy_panel(6, vec![1, 1, 2, 2, 2, 3], |_, j| match j {
            0 | 1 => 1.0,
            2..=4 => 2.0,
            _ => 3.0,
        });
        let avg = compute_block_averages(&panel).unwrap();
        for t in 0..6 {
            assert_eq!(avg.f_hat[(t, 0)], 1.0);
            assert_eq!(avg.f_hat[(t, 1)], 2.0);
            assert_eq!(avg.f_hat[(t, 2)], 3.0);
        }
    }

    #[test]
    fn matches_loop_oracle_on_random_panel() {
        // 5x6 panel, 2 blocks of 3 series; independent loop-over-series mean.
        let mut rng = StdRng::seed_from_u64(7);
        let values = DMatrix::from_fn(5, 6, |_, _| rng.random::<f64>() * 10.0 - 5.0);
        let block_of = vec![1, 1, 1, 2, 2, 2];
        let panel = PanelDataset::from_values(values.clone(), block_of.clone()).unwrap();
        let avg = compute_block_averages(&panel).unwrap();
        for t in 0..5 {
            for (b, cols) in [(0usize, [0usize, 1, 2]), (1, [3, 4, 5])] {
                let mut s = 0.0;
                for c in cols {
                    s += values[(t, c)];
                }
                assert!((avg.f_hat[(t, b)] - s / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn square_loading_matrix_recovers_factors_exactly() {
        // m = r = 2 with zero idiosyncratics: inverting the average loadings
        // recovers the factors exactly.
        let t_len = 8;
        let lambda = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.5, 2.0]);
        let f = DMatrix::from_fn(t_len, 2, |t, k| ((t + 1) as f64).sin() + k as f64);
        // x_t (block means) = Lambda' f_t, one series per block.
        let x = &f * &lambda; // row t = f_t' Lambda = (Lambda' f_t)'
        let panel = PanelDataset::from_values(x, vec![1, 2]).unwrap();
        let avg = compute_block_averages(&panel).unwrap();
        let lambda_t_inv = lambda.transpose().try_inverse().unwrap();
        for t in 0..t_len {
            let fhat_t = avg.f_hat.row(t).transpose();
            let rec = &lambda_t_inv * fhat_t;
            for k in 0..2 {
                assert!((rec[k] - f[(t, k)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn averaging_is_linear() {
        let mut rng = StdRng::seed_from_u64(11);
        let block_of = vec![1, 1, 2, 2, 3];
        let p = DMatrix::from_fn(7, 5, |_, _| rng.random::<f64>());
        let q = DMatrix::from_fn(7, 5, |_, _| rng.random::<f64>());
        let (a, b) = (2.5, -1.25);
        let combo =
            PanelDataset::from_values(&p * a + &q * b, block_of.clone()).unwrap();
        let pa = compute_block_averages(&PanelDataset::from_values(p, block_of.clone()).unwrap())
            .unwrap();
        let qa = compute_block_averages(&PanelDataset::from_values(q, block_of).unwrap()).unwrap();
        let lhs = compute_block_averages(&combo).unwrap();
        let rhs = pa.f_hat * a + qa.f_hat * b;
        for (x, y) in lhs.f_hat.iter().zip(rhs.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_block_is_rejected() {
        let values = DMatrix::from_element(3, 3, 1.0);
        // Block 2 never appears although block 3 does.
        let err = PanelDataset::from_values(values, vec![1, 3, 3]).unwrap_err();
        assert!(matches!(err, Error::EmptyBlock { block: 2 }));
    }

    #[test]
    fn nan_entries_are_rejected() {
        let mut values = DMatrix::from_element(3, 2, 1.0);
        values[(1, 1)] = f64::NAN;
        assert!(PanelDataset::from_values(values, vec![1, 2]).is_err());
    }
}

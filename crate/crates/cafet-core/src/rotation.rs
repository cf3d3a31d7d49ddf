//! Rotation-matrix algebra for block averages.
//!
//! When the number of blocks m exceeds the true factor count r, the block
//! averages estimate the factors only up to an invertible transformation.
//! The rotation H maps the average loading matrix onto [I_r, 0] and the
//! diagonal scaling D_N re-inflates the m - r redundant coordinates so their
//! sample second-moment matrix stays invertible. This is an analytical
//! device for tests and simulations; the user-facing test path never needs
//! it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::panel::BlockAverages;

/// Singular values below this threshold make the leading loading sub-block
/// rank deficient.
pub const RANK_THRESHOLD: f64 = 1e-12;

/// The rotation pair (H, D_N) built from an r x m average loading matrix.
#[derive(Debug, Clone)]
pub struct RotationDevice {
    /// m x m rotation with Lambda * H = [I_r, 0].
    pub h_bar: DMatrix<f64>,
    /// m x m diagonal scaling diag(1,...,1, sqrt(N),...,sqrt(N)) with r ones.
    pub d_n: DMatrix<f64>,
    /// True factor count r.
    pub r: usize,
    /// Block size N used for the scaling.
    pub n: usize,
    /// Condition number of the leading r x r loading sub-block.
    pub condition: f64,
}

/// Build the rotation device from the average loading matrix.
///
/// `lambda_bar` is r x m with an invertible leading r x r sub-block; `n` is
/// the (harmonized) per-block series count. When m = r the rotation is the
/// plain inverse and D_N = I_r.
pub fn rotation_device(lambda_bar: &DMatrix<f64>, n: usize) -> Result<RotationDevice> {
    let r = lambda_bar.nrows();
    let m = lambda_bar.ncols();
    if r == 0 || m < r {
        return Err(Error::DimensionMismatch {
            context: "loading matrix (need m >= r >= 1)",
            expected: r.max(1),
            actual: m,
        });
    }
    let lambda_r = lambda_bar.view((0, 0), (r, r)).clone_owned();
    let svd = lambda_r.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin < RANK_THRESHOLD {
        return Err(Error::RankViolation {
            min_singular: smin,
            threshold: RANK_THRESHOLD,
        });
    }
    let condition = smax / smin;
    let lambda_r_inv = lambda_r
        .try_inverse()
        .ok_or(Error::RankViolation {
            min_singular: smin,
            threshold: RANK_THRESHOLD,
        })?;

    let mut h_bar = DMatrix::<f64>::zeros(m, m);
    h_bar.view_mut((0, 0), (r, r)).copy_from(&lambda_r_inv);
    if m > r {
        let lambda_rest = lambda_bar.view((0, r), (r, m - r)).clone_owned();
        let top_right = -&lambda_r_inv * lambda_rest;
        h_bar.view_mut((0, r), (r, m - r)).copy_from(&top_right);
        h_bar
            .view_mut((r, r), (m - r, m - r))
            .copy_from(&DMatrix::identity(m - r, m - r));
    }

    let mut d_n = DMatrix::<f64>::identity(m, m);
    let sqrt_n = (n as f64).sqrt();
    for k in r..m {
        d_n[(k, k)] = sqrt_n;
    }

    Ok(RotationDevice {
        h_bar,
        d_n,
        r,
        n,
        condition,
    })
}

/// Apply the rotation to estimated factors: row t of the result is
/// D_N * H' * f_hat_t.
pub fn transformed_factors(f_hat: &BlockAverages, device: &RotationDevice) -> Result<DMatrix<f64>> {
    let m = f_hat.m;
    if device.h_bar.nrows() != m {
        return Err(Error::DimensionMismatch {
            context: "rotation vs block averages",
            expected: m,
            actual: device.h_bar.nrows(),
        });
    }
    // (D_N H' f_t)' = f_t' H D_N, applied to all rows at once.
    Ok(&f_hat.f_hat * &device.h_bar * &device.d_n)
}

//! Summation kernels for the four statistics.
//!
//! Every statistic combines partial sums of per-origin loss products:
//! u1_t^2, u2_t^2 (or u1_t * u2_t for s1), and (u1_t - u2_t)^2 for the
//! enhancement. Numerators are evaluated from prefix sums with the scale
//! factors applied as (n * sum) / l, which keeps the exact-cancellation
//! identities (constant equal errors give a numerator of exactly zero) and
//! makes the segment-averaged statistics O(n). The same structure yields
//! the exact null variance of the unnormalized statistic,
//! (1/n) * sum_t (a_t + b_t)^2 over the per-origin weights.

use crate::error::{Error, Result};
use crate::recursive::ForecastErrorPair;
use crate::stats::{StatId, TuningParams};

#[derive(Debug, Clone)]
enum Kernel {
    /// Full-window u1^2 sum against the split average of u1*u2.
    S1 { m0: usize },
    /// Two-segment loss differential.
    S2 { l1: usize, l2: usize },
    /// s2 averaged over l1 in (lower, n] with fixed l2.
    S3 {
        lower: usize,
        l2: usize,
        kept: usize,
        divisor: f64,
    },
    /// s2 averaged over l2 in (lower, n] with fixed l1.
    S4 {
        lower: usize,
        l1: usize,
        kept: usize,
        divisor: f64,
    },
}

/// Summation kernel for one statistic at one sample size.
#[derive(Debug, Clone)]
pub struct StatWeights {
    stat: StatId,
    n: usize,
    kernel: Kernel,
    /// Inner terms dropped because the averaged endpoint collided with the
    /// fixed one (s3/s4 only).
    pub skipped: usize,
}

fn segment_len(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction).floor() as usize
}

/// Prefix sums: out[k] = sum of the first k products.
fn prefix(values: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v;
        out.push(acc);
    }
    out
}

impl StatWeights {
    /// Build the kernel for `stat` from fractional tuning parameters.
    pub fn build(stat: StatId, n: usize, tuning: &TuningParams) -> Result<Self> {
        match stat {
            StatId::S1 => Self::build_s1(n, tuning.mu0),
            StatId::S2 => Self::build_s2(
                n,
                segment_len(n, tuning.lambda1),
                segment_len(n, tuning.lambda2),
            ),
            StatId::S3 => Self::build_s3(n, tuning.nu0, tuning.lambda2),
            StatId::S4 => Self::build_s4(n, tuning.lambda1, tuning.nu0),
        }
    }

    /// s1 with split point m0 = floor(n * mu0).
    pub fn build_s1(n: usize, mu0: f64) -> Result<Self> {
        let m0 = segment_len(n, mu0);
        if m0 < 1 || m0 >= n {
            return Err(Error::InvalidTuning(format!(
                "s1 split floor(n*mu0) = {m0} invalid for n = {n}"
            )));
        }
        Ok(Self {
            stat: StatId::S1,
            n,
            kernel: Kernel::S1 { m0 },
            skipped: 0,
        })
    }

    /// s2 with explicit segment lengths.
    pub fn build_s2(n: usize, l1: usize, l2: usize) -> Result<Self> {
        if l1 < 1 || l2 < 1 || l1 > n || l2 > n {
            return Err(Error::InvalidTuning(format!(
                "s2 segment lengths must lie in 1..={n}, got l1 = {l1}, l2 = {l2}"
            )));
        }
        if l1 == l2 {
            return Err(Error::InvalidTuning(
                "s2 requires l1 != l2: fully overlapping segments are degenerate".into(),
            ));
        }
        Ok(Self {
            stat: StatId::S2,
            n,
            kernel: Kernel::S2 { l1, l2 },
            skipped: 0,
        })
    }

    /// s3: average over l1 in (floor(n*nu0), n], fixed l2 = floor(n*lambda2).
    /// A colliding l1 = l2 term is skipped and the divisor reduced by one.
    pub fn build_s3(n: usize, nu0: f64, lambda2: f64) -> Result<Self> {
        let lower = segment_len(n, nu0);
        let l2 = segment_len(n, lambda2);
        if lower + 1 > n {
            return Err(Error::InvalidTuning(format!(
                "s3 averaging range (floor(n*nu0), n] is empty for n = {n}"
            )));
        }
        if l2 < 1 {
            return Err(Error::InvalidTuning(format!(
                "s3 fixed segment floor(n*lambda2) = {l2} must be >= 1"
            )));
        }
        let skipped = usize::from(l2 > lower && l2 <= n);
        let kept = (n - lower) - skipped;
        if kept == 0 {
            return Err(Error::InvalidTuning(
                "s3 average has no non-degenerate terms".into(),
            ));
        }
        let divisor = n as f64 * (1.0 - nu0) - skipped as f64;
        Ok(Self {
            stat: StatId::S3,
            n,
            kernel: Kernel::S3 {
                lower,
                l2,
                kept,
                divisor,
            },
            skipped,
        })
    }

    /// s4: fixed l1 = floor(n*lambda1), average over l2 in (floor(n*nu0), n].
    pub fn build_s4(n: usize, lambda1: f64, nu0: f64) -> Result<Self> {
        let lower = segment_len(n, nu0);
        let l1 = segment_len(n, lambda1);
        if lower + 1 > n {
            return Err(Error::InvalidTuning(format!(
                "s4 averaging range (floor(n*nu0), n] is empty for n = {n}"
            )));
        }
        if l1 < 1 {
            return Err(Error::InvalidTuning(format!(
                "s4 fixed segment floor(n*lambda1) = {l1} must be >= 1"
            )));
        }
        let skipped = usize::from(l1 > lower && l1 <= n);
        let kept = (n - lower) - skipped;
        if kept == 0 {
            return Err(Error::InvalidTuning(
                "s4 average has no non-degenerate terms".into(),
            ));
        }
        let divisor = n as f64 * (1.0 - nu0) - skipped as f64;
        Ok(Self {
            stat: StatId::S4,
            n,
            kernel: Kernel::S4 {
                lower,
                l1,
                kept,
                divisor,
            },
            skipped,
        })
    }

    /// Numerator of the statistic before the 1/omega standardization.
    pub fn unnormalized_value(&self, pair: &ForecastErrorPair) -> f64 {
        self.unnormalized_value_on(&pair.u1, &pair.u2)
    }

    /// Numerator evaluated on raw error slices.
    pub fn unnormalized_value_on(&self, u1: &[f64], u2: &[f64]) -> f64 {
        debug_assert_eq!(u1.len(), self.n);
        debug_assert_eq!(u2.len(), self.n);
        let n = self.n;
        let nf = n as f64;
        let rn = nf.sqrt();
        match self.kernel {
            Kernel::S1 { m0 } => {
                let full: f64 = u1.iter().map(|u| u * u).sum();
                let first: f64 = (0..m0).map(|t| u1[t] * u2[t]).sum();
                let rest: f64 = (m0..n).map(|t| u1[t] * u2[t]).sum();
                (full - (nf * first) / (2.0 * m0 as f64) - (nf * rest) / (2.0 * (n - m0) as f64))
                    / rn
            }
            Kernel::S2 { l1, l2 } => {
                let p1: f64 = u1[..l1].iter().map(|u| u * u).sum();
                let p2: f64 = u2[..l2].iter().map(|u| u * u).sum();
                ((nf * p1) / l1 as f64 - (nf * p2) / l2 as f64) / rn
            }
            Kernel::S3 {
                lower,
                l2,
                kept,
                divisor,
            } => {
                let p1 = prefix(u1.iter().map(|u| u * u), n);
                let p2: f64 = u2[..l2].iter().map(|u| u * u).sum();
                let mut acc = 0.0;
                for l1 in (lower + 1)..=n {
                    if l1 == l2 {
                        continue;
                    }
                    acc += (nf * p1[l1]) / l1 as f64;
                }
                acc -= kept as f64 * ((nf * p2) / l2 as f64);
                acc / divisor / rn
            }
            Kernel::S4 {
                lower,
                l1,
                kept,
                divisor,
            } => {
                let p1: f64 = u1[..l1].iter().map(|u| u * u).sum();
                let p2 = prefix(u2.iter().map(|u| u * u), n);
                let mut acc = kept as f64 * ((nf * p1) / l1 as f64);
                for l2 in (lower + 1)..=n {
                    if l2 == l1 {
                        continue;
                    }
                    acc -= (nf * p2[l2]) / l2 as f64;
                }
                acc / divisor / rn
            }
        }
    }

    /// Unnormalized power-enhancement term: the non-negative amount added to
    /// the numerator when each u2^2 is replaced by u2^2 - (u1 - u2)^2.
    pub fn unnormalized_enhancement(&self, pair: &ForecastErrorPair) -> Result<f64> {
        let (u1, u2) = (&pair.u1, &pair.u2);
        debug_assert_eq!(u1.len(), self.n);
        let n = self.n;
        let nf = n as f64;
        let rn = nf.sqrt();
        let value = match self.kernel {
            Kernel::S1 { .. } => {
                return Err(Error::UnsupportedEnhancement(self.stat.as_str()));
            }
            Kernel::S2 { l2, .. } => {
                let pd: f64 = (0..l2).map(|t| (u1[t] - u2[t]).powi(2)).sum();
                (nf * pd) / l2 as f64 / rn
            }
            Kernel::S3 {
                l2, kept, divisor, ..
            } => {
                let pd: f64 = (0..l2).map(|t| (u1[t] - u2[t]).powi(2)).sum();
                kept as f64 * ((nf * pd) / l2 as f64) / divisor / rn
            }
            Kernel::S4 {
                lower,
                l1,
                divisor,
                ..
            } => {
                let pd = prefix((0..n).map(|t| (u1[t] - u2[t]).powi(2)), n);
                let mut acc = 0.0;
                for l2 in (lower + 1)..=n {
                    if l2 == l1 {
                        continue;
                    }
                    acc += (nf * pd[l2]) / l2 as f64;
                }
                acc / divisor / rn
            }
        };
        Ok(value)
    }

    /// Per-origin weights (a_t on u1^2, b_t on the second product); used for
    /// the exact null variance.
    fn weight_vectors(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let nf = n as f64;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        match self.kernel {
            Kernel::S1 { m0 } => {
                let w_first = -nf / (2.0 * m0 as f64);
                let w_rest = -nf / (2.0 * (n - m0) as f64);
                for t in 0..n {
                    a[t] = 1.0;
                    b[t] = if t < m0 { w_first } else { w_rest };
                }
            }
            Kernel::S2 { l1, l2 } => {
                for at in a.iter_mut().take(l1) {
                    *at = nf / l1 as f64;
                }
                for bt in b.iter_mut().take(l2) {
                    *bt = -nf / l2 as f64;
                }
            }
            Kernel::S3 {
                lower,
                l2,
                kept,
                divisor,
            } => {
                // suffix[k] = sum over kept l1 >= k of n/l1.
                let mut suffix = vec![0.0; n + 2];
                for l1 in ((lower + 1)..=n).rev() {
                    let term = if l1 == l2 { 0.0 } else { nf / l1 as f64 };
                    suffix[l1] = suffix[l1 + 1] + term;
                }
                for (t, at) in a.iter_mut().enumerate() {
                    *at = suffix[(t + 1).max(lower + 1)] / divisor;
                }
                let b_val = -(kept as f64) * (nf / l2 as f64) / divisor;
                for bt in b.iter_mut().take(l2) {
                    *bt = b_val;
                }
            }
            Kernel::S4 {
                lower,
                l1,
                kept,
                divisor,
            } => {
                let mut suffix = vec![0.0; n + 2];
                for l2 in ((lower + 1)..=n).rev() {
                    let term = if l2 == l1 { 0.0 } else { nf / l2 as f64 };
                    suffix[l2] = suffix[l2 + 1] + term;
                }
                let a_val = (kept as f64) * (nf / l1 as f64) / divisor;
                for at in a.iter_mut().take(l1) {
                    *at = a_val;
                }
                for (t, bt) in b.iter_mut().enumerate() {
                    *bt = -suffix[(t + 1).max(lower + 1)] / divisor;
                }
            }
        }
        (a, b)
    }

    /// Exact null variance of the unnormalized statistic divided by phi^2:
    /// (1/n) * sum_t (a_t + b_t)^2.
    pub fn closed_form_theta(&self) -> f64 {
        let (a, b) = self.weight_vectors();
        let mut sum = 0.0;
        for t in 0..self.n {
            let c = a[t] + b[t];
            sum += c * c;
        }
        sum / self.n as f64
    }
}

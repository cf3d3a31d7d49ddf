//! Monte Carlo data-generating processes and experiment harness.
//!
//! Nine benchmark designs for a block-structured factor panel with an
//! autoregressive target. The designs differ in idiosyncratic dependence,
//! error laws, loading behavior (constant mean, out-of-sample break, or zero
//! mean so the averages lose the factors), and persistence. The `tau`
//! parameter moves the autoregressive roots of the target and the factor
//! toward one at rate T^(-tau).

pub mod calibrate;
pub mod experiment;
pub mod rng;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;

/// In-sample fraction: k0 = floor(0.25 * T).
pub const PI0: f64 = 0.25;

/// Spatial moving-average order of the idiosyncratic cross-dependence.
pub const SPATIAL_ORDER: usize = 5;

/// Burn-in periods for all autoregressive recursions.
pub const BURN_IN: usize = 50;

/// Law of the forecast-equation error u_t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorLaw {
    /// Standard normal.
    Normal,
    /// Student t with 10 degrees of freedom.
    StudentT10,
    /// First-order ARCH: u_t ~ N(0, (1-phi) + phi u_{t-1}^2), phi = 1/2,
    /// initialized at the unconditional value u_0^2 = 1.
    Arch,
}

/// Law of the panel innovation epsilon_{i,t}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonLaw {
    /// Normal with per-series variances drawn once from U(0.5, 1.5).
    NormalFixed,
    /// Normal with variances redrawn from U(0.5, 1.5) every period.
    NormalTimeVarying,
    /// Student t with 10 degrees of freedom.
    StudentT10,
}

/// Law of the idiosyncratic AR(1) coefficients rho_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoLaw {
    /// No serial dependence.
    Zero,
    /// rho_i drawn from U(lo, hi).
    Uniform(f64, f64),
}

/// Loading behavior across the nine designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadingStyle {
    /// Entries drawn from N(mean, 1), constant over time.
    ConstantMean(f64),
    /// Mean shifts from 1 to 2 at t = T/2 (an out-of-sample break when
    /// k0 = T/4): independent draws before and after.
    BreakAtMidpoint,
}

/// Full parameterization of one Monte Carlo design.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    /// Design id 1..=9.
    pub dgp_id: u8,
    /// Series per block.
    pub n: usize,
    /// Sample length.
    pub t_len: usize,
    /// Number of blocks.
    pub m: usize,
    /// Number of true factors.
    pub r: usize,
    /// Factor coefficient in the target equation (0 under the null).
    pub alpha: f64,
    /// Persistence exponent in [0, 1): roots move as 1 - c * T^(-tau).
    pub tau: f64,
    /// Base target-equation AR coefficient (at tau = 0).
    pub theta_base: f64,
    /// Base factor AR coefficient (at tau = 0).
    pub delta_base: f64,
    /// Idiosyncratic AR(1) coefficient law.
    pub rho_law: RhoLaw,
    /// Spatial moving-average coefficient.
    pub beta: f64,
    /// Panel innovation law.
    pub epsilon_law: EpsilonLaw,
    /// Forecast-error law.
    pub error_law: ErrorLaw,
    /// Loading behavior.
    pub loading_style: LoadingStyle,
    /// Forecast horizon.
    pub h: usize,
    /// Optional AR(1) coefficient for the forecast errors.
    pub gamma: Option<f64>,
    /// Replication seed.
    pub seed: u64,
}

impl DgpSpec {
    /// Benchmark design `dgp_id` from the standard table, with the given
    /// panel dimensions, m = 3 blocks, r = 1 factor, alpha = 0, tau = 0,
    /// h = 1 and seed 0.
    pub fn design(dgp_id: u8, n: usize, t_len: usize) -> Result<Self> {
        let base = Self {
            dgp_id,
            n,
            t_len,
            m: 3,
            r: 1,
            alpha: 0.0,
            tau: 0.0,
            theta_base: 0.5,
            delta_base: 0.4,
            rho_law: RhoLaw::Uniform(0.2, 0.6),
            beta: 0.2,
            epsilon_law: EpsilonLaw::NormalFixed,
            error_law: ErrorLaw::Normal,
            loading_style: LoadingStyle::ConstantMean(1.0),
            h: 1,
            gamma: None,
            seed: 0,
        };
        let spec = match dgp_id {
            1 => Self {
                delta_base: 0.0,
                rho_law: RhoLaw::Zero,
                beta: 0.0,
                ..base
            },
            2 => base,
            3 => Self {
                rho_law: RhoLaw::Uniform(0.6, 1.0),
                beta: 0.4,
                ..base
            },
            4 => Self {
                epsilon_law: EpsilonLaw::StudentT10,
                ..base
            },
            5 => Self {
                epsilon_law: EpsilonLaw::NormalTimeVarying,
                ..base
            },
            6 => Self {
                error_law: ErrorLaw::Arch,
                ..base
            },
            7 => Self {
                error_law: ErrorLaw::StudentT10,
                ..base
            },
            8 => Self {
                loading_style: LoadingStyle::BreakAtMidpoint,
                ..base
            },
            9 => Self {
                loading_style: LoadingStyle::ConstantMean(0.0),
                ..base
            },
            other => {
                return Err(Error::InvalidTuning(format!(
                    "unknown DGP id {other}, expected 1..=9"
                )))
            }
        };
        Ok(spec)
    }

    /// Structural validity of the design.
    pub fn validate(&self) -> Result<()> {
        if self.r < 1 || self.m < self.r {
            return Err(Error::InvalidTuning(format!(
                "need m >= r >= 1, got m = {}, r = {}",
                self.m, self.r
            )));
        }
        if self.n == 0 || self.t_len < 8 {
            return Err(Error::InvalidTuning(
                "need N >= 1 and T >= 8 for a usable design".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::InvalidTuning(format!(
                "tau must lie in [0,1), got {}",
                self.tau
            )));
        }
        if self.h == 0 {
            return Err(Error::InvalidTuning("horizon h must be >= 1".into()));
        }
        Ok(())
    }

    /// In-sample cutoff k0 = floor(0.25 * T).
    pub fn k0(&self) -> usize {
        (PI0 * self.t_len as f64).floor() as usize
    }

    /// Short textual identifier used in report rows.
    pub fn spec_id(&self) -> String {
        format!(
            "dgp{}_N{}_T{}_m{}_r{}_tau{}_a{}_h{}{}",
            self.dgp_id,
            self.n,
            self.t_len,
            self.m,
            self.r,
            self.tau,
            self.alpha,
            self.h,
            match self.gamma {
                Some(g) => format!("_g{g}"),
                None => String::new(),
            }
        )
    }

    /// Stable content hash of every field (seed excluded), used to key
    /// replication streams.
    pub fn stable_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update([self.dgp_id]);
        for v in [self.n as u64, self.t_len as u64, self.m as u64, self.r as u64, self.h as u64] {
            hasher.update(v.to_le_bytes());
        }
        for v in [self.alpha, self.tau, self.theta_base, self.delta_base, self.beta] {
            hasher.update(v.to_bits().to_le_bytes());
        }
        match self.rho_law {
            RhoLaw::Zero => hasher.update([0u8]),
            RhoLaw::Uniform(a, b) => {
                hasher.update([1u8]);
                hasher.update(a.to_bits().to_le_bytes());
                hasher.update(b.to_bits().to_le_bytes());
            }
        }
        hasher.update([match self.epsilon_law {
            EpsilonLaw::NormalFixed => 0u8,
            EpsilonLaw::NormalTimeVarying => 1,
            EpsilonLaw::StudentT10 => 2,
        }]);
        hasher.update([match self.error_law {
            ErrorLaw::Normal => 0u8,
            ErrorLaw::StudentT10 => 1,
            ErrorLaw::Arch => 2,
        }]);
        match self.loading_style {
            LoadingStyle::ConstantMean(mu) => {
                hasher.update([0u8]);
                hasher.update(mu.to_bits().to_le_bytes());
            }
            LoadingStyle::BreakAtMidpoint => hasher.update([1u8]),
        }
        match self.gamma {
            None => hasher.update([0u8]),
            Some(g) => {
                hasher.update([1u8]);
                hasher.update(g.to_bits().to_le_bytes());
            }
        }
        hasher.finalize().into()
    }
}

/// Persistence mapping 1 - (1 - base) * T^(-tau); returns `base` exactly at
/// tau = 0 and approaches one as tau grows.
pub fn persistence_coefficients(base: f64, tau: f64, t_len: usize) -> f64 {
    1.0 - (1.0 - base) * (t_len as f64).powf(-tau)
}

/// One simulated dataset: target, predictor panel, and the latent truth.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    /// Target series y_1..y_T.
    pub y: Vec<f64>,
    /// Block-structured predictor panel.
    pub panel: PanelDataset,
    /// True factor path, T x r.
    pub true_f: DMatrix<f64>,
    /// Per-series loading draws (r x m each; the pre-break set for the
    /// breaking design), kept for rotation-based checks.
    pub loadings: Vec<DMatrix<f64>>,
}

impl SimulatedData {
    /// Average loading matrix over the cross-section (r x m).
    pub fn lambda_bar(&self) -> DMatrix<f64> {
        let r = self.loadings[0].nrows();
        let m = self.loadings[0].ncols();
        let mut acc = DMatrix::<f64>::zeros(r, m);
        for l in &self.loadings {
            acc += l;
        }
        acc / self.loadings.len() as f64
    }
}

fn draw_epsilon<R: Rng>(
    law: EpsilonLaw,
    sigma_fixed: f64,
    rng_eps: &mut R,
    rng_sigma: &mut R,
    t10: &StudentT<f64>,
) -> f64 {
    match law {
        EpsilonLaw::NormalFixed => {
            let z: f64 = StandardNormal.sample(rng_eps);
            sigma_fixed.sqrt() * z
        }
        EpsilonLaw::NormalTimeVarying => {
            let sigma: f64 = rng_sigma.random_range(0.5..1.5);
            let z: f64 = StandardNormal.sample(rng_eps);
            sigma.sqrt() * z
        }
        EpsilonLaw::StudentT10 => t10.sample(rng_eps),
    }
}

/// Generate one dataset from the design, bit-reproducible from
/// (spec, spec.seed).
pub fn generate_dgp(spec: &DgpSpec) -> Result<SimulatedData> {
    spec.validate()?;
    let (n, t_len, m, r) = (spec.n, spec.t_len, spec.m, spec.r);
    let total_t = t_len + BURN_IN;
    let t10 = StudentT::new(10.0).expect("valid dof");

    // A zero base keeps the factors white noise at every tau: the
    // persistence experiments move roots that exist, they do not create
    // dynamics in a design defined to have none.
    let delta = if spec.delta_base == 0.0 {
        0.0
    } else {
        persistence_coefficients(spec.delta_base, spec.tau, t_len)
    };
    let theta = persistence_coefficients(spec.theta_base, spec.tau, t_len);

    // Loadings: r x m entries per series, N(mean, 1); the breaking design
    // draws an independent post-break set with mean 2.
    let mut rng_load = rng::component_stream(spec.seed, "loadings");
    let draw_loadings = |rng: &mut rand_chacha::ChaCha8Rng, mean: f64| -> Vec<DMatrix<f64>> {
        (0..n)
            .map(|_| {
                DMatrix::from_fn(r, m, |_, _| {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + z
                })
            })
            .collect()
    };
    let (loadings_pre, loadings_post) = match spec.loading_style {
        LoadingStyle::ConstantMean(mu) => (draw_loadings(&mut rng_load, mu), None),
        LoadingStyle::BreakAtMidpoint => {
            let pre = draw_loadings(&mut rng_load, 1.0);
            let post = draw_loadings(&mut rng_load, 2.0);
            (pre, Some(post))
        }
    };
    let break_at = t_len / 2; // in kept time; earlier periods use the pre set

    // Per-series innovation variances (fixed-law only) and AR coefficients.
    let mut rng_sigma = rng::component_stream(spec.seed, "sigma");
    let sigma: Vec<f64> = match spec.epsilon_law {
        EpsilonLaw::NormalFixed => (0..n * m).map(|_| rng_sigma.random_range(0.5..1.5)).collect(),
        _ => vec![1.0; n * m],
    };
    let mut rng_rho = rng::component_stream(spec.seed, "rho");
    let rho: Vec<f64> = (0..n)
        .map(|_| match spec.rho_law {
            RhoLaw::Zero => 0.0,
            RhoLaw::Uniform(lo, hi) => rng_rho.random_range(lo..hi),
        })
        .collect();

    // Factors: independent AR(1) components with unit stationary variance.
    let mut rng_f = rng::component_stream(spec.seed, "factors");
    let innov_scale = (1.0 - delta * delta).max(0.0).sqrt();
    let mut f_path = vec![0.0f64; total_t * r];
    for k in 0..r {
        let mut prev: f64 = StandardNormal.sample(&mut rng_f);
        for t in 0..total_t {
            let v: f64 = StandardNormal.sample(&mut rng_f);
            let cur = delta * prev + innov_scale * v;
            f_path[t * r + k] = cur;
            prev = cur;
        }
    }

    // Forecast errors.
    let mut rng_u = rng::component_stream(spec.seed, "errors");
    let mut u = vec![0.0f64; total_t];
    match spec.error_law {
        ErrorLaw::Normal => {
            for v in u.iter_mut() {
                *v = StandardNormal.sample(&mut rng_u);
            }
        }
        ErrorLaw::StudentT10 => {
            for v in u.iter_mut() {
                *v = t10.sample(&mut rng_u);
            }
        }
        ErrorLaw::Arch => {
            let phi = 0.5;
            let mut prev_sq = 1.0f64;
            for v in u.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng_u);
                let cur = ((1.0 - phi) + phi * prev_sq).sqrt() * z;
                prev_sq = cur * cur;
                *v = cur;
            }
        }
    }
    if let Some(g) = spec.gamma {
        let scale = (1.0 - g * g).max(0.0).sqrt();
        let mut prev = 0.0;
        for v in u.iter_mut() {
            let cur = g * prev + scale * *v;
            prev = cur;
            *v = cur;
        }
    }

    // Panel innovations epsilon, laid out [(t, j) x i] for the spatial sum.
    let mut rng_eps = rng::component_stream(spec.seed, "epsilon");
    let mut rng_eps_sigma = rng::component_stream(spec.seed, "epsilon_sigma");
    let mut eps_row = vec![0.0f64; n]; // reused per (t, j)
    let mut w_row = vec![0.0f64; n];

    // Idiosyncratic state per (i, j) plus stationary initialization: the
    // innovation scaling sqrt(1 - rho^2) keeps the marginal variance at
    // Var(w_i), which is computable from the spatial weights.
    let entry_var = |i: usize, j: usize| -> f64 {
        match spec.epsilon_law {
            EpsilonLaw::NormalFixed => sigma[i * m + j],
            EpsilonLaw::NormalTimeVarying => 1.0,
            EpsilonLaw::StudentT10 => 10.0 / 8.0,
        }
    };
    let mut rng_e0 = rng::component_stream(spec.seed, "idio_init");
    let mut e_state = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            let mut var_w = entry_var(i, j);
            for k in 1..=SPATIAL_ORDER {
                if i >= k {
                    var_w += spec.beta * spec.beta * entry_var(i - k, j);
                }
                if i + k < n {
                    var_w += spec.beta * spec.beta * entry_var(i + k, j);
                }
            }
            let z: f64 = StandardNormal.sample(&mut rng_e0);
            e_state[i * m + j] = var_w.sqrt() * z;
        }
    }

    // Assemble the panel: series are grouped by block, column (j*N + i).
    let mut values = DMatrix::<f64>::zeros(t_len, n * m);
    let mut true_f = DMatrix::<f64>::zeros(t_len, r);
    let mut y_full = vec![0.0f64; total_t];
    let alpha_vec = vec![spec.alpha; r];

    for t in 0..total_t {
        let kept_t = t.checked_sub(BURN_IN);
        // Idiosyncratics, one (t, j) slab at a time.
        for j in 0..m {
            for (i, e) in eps_row.iter_mut().enumerate() {
                *e = draw_epsilon(
                    spec.epsilon_law,
                    sigma[i * m + j],
                    &mut rng_eps,
                    &mut rng_eps_sigma,
                    &t10,
                );
            }
            for i in 0..n {
                let mut w = eps_row[i];
                for k in 1..=SPATIAL_ORDER {
                    if i >= k {
                        w += spec.beta * eps_row[i - k];
                    }
                    if i + k < n {
                        w += spec.beta * eps_row[i + k];
                    }
                }
                w_row[i] = w;
            }
            for i in 0..n {
                let rho_i = rho[i];
                let scale = (1.0 - rho_i * rho_i).max(0.0).sqrt();
                let e = rho_i * e_state[i * m + j] + scale * w_row[i];
                e_state[i * m + j] = e;
                if let Some(tk) = kept_t {
                    let lambda = match (&loadings_post, tk >= break_at) {
                        (Some(post), true) => &post[i],
                        _ => &loadings_pre[i],
                    };
                    let mut x = e;
                    for k in 0..r {
                        x += lambda[(k, j)] * f_path[t * r + k];
                    }
                    values[(tk, j * n + i)] = x;
                }
            }
        }
        // Target recursion y_{t+1} = theta y_t + alpha' f_t + u_{t+1}: the
        // signal dated t reaches the target one period later.
        let mut signal = 0.0;
        if t > 0 {
            for k in 0..r {
                signal += alpha_vec[k] * f_path[(t - 1) * r + k];
            }
        }
        y_full[t] = theta * if t > 0 { y_full[t - 1] } else { 0.0 } + signal + u[t];
        if let Some(tk) = kept_t {
            for k in 0..r {
                true_f[(tk, k)] = f_path[t * r + k];
            }
        }
    }

    let block_of: Vec<usize> = (0..n * m).map(|c| c / n + 1).collect();
    let panel = PanelDataset::from_values(values, block_of)?;
    Ok(SimulatedData {
        y: y_full[BURN_IN..].to_vec(),
        panel,
        true_f,
        loadings: loadings_pre,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag1_autocorr(x: &[f64]) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let cov: f64 = (1..n).map(|t| (x[t] - mean) * (x[t - 1] - mean)).sum();
        cov / var
    }

    #[test]
    fn persistence_mapping_examples() {
        assert_eq!(persistence_coefficients(0.5, 0.0, 1234), 0.5);
        assert!((persistence_coefficients(0.5, 1.0, 100) - 0.995).abs() < 1e-15);
        assert_eq!(persistence_coefficients(0.0, 0.0, 50), 0.0);
    }

    #[test]
    fn dgp1_factors_are_serially_uncorrelated() {
        let mut spec = DgpSpec::design(1, 10, 2000).unwrap();
        spec.seed = 5;
        let sim = generate_dgp(&spec).unwrap();
        let f: Vec<f64> = (0..spec.t_len).map(|t| sim.true_f[(t, 0)]).collect();
        assert!(lag1_autocorr(&f).abs() < 0.05);
    }

    #[test]
    fn dgp2_factor_variance_is_near_one() {
        let mut spec = DgpSpec::design(2, 10, 5000).unwrap();
        spec.seed = 11;
        let sim = generate_dgp(&spec).unwrap();
        let f: Vec<f64> = (0..spec.t_len).map(|t| sim.true_f[(t, 0)]).collect();
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        let var = f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / f.len() as f64;
        assert!((0.9..=1.1).contains(&var), "var = {var}");
    }

    #[test]
    fn same_spec_and_seed_is_bit_identical() {
        let mut spec = DgpSpec::design(6, 7, 120).unwrap();
        spec.seed = 99;
        spec.alpha = 0.3;
        spec.tau = 0.4;
        let a = generate_dgp(&spec).unwrap();
        let b = generate_dgp(&spec).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.panel.values, b.panel.values);
        assert_eq!(a.true_f, b.true_f);
    }

    #[test]
    fn ar_error_extension_induces_serial_correlation() {
        let mut spec = DgpSpec::design(2, 5, 3000).unwrap();
        spec.seed = 17;
        spec.theta_base = 0.0;
        spec.gamma = Some(0.8);
        let with_ar = generate_dgp(&spec).unwrap();
        // theta = 0 and alpha = 0 make y equal to the error process itself.
        let rho = lag1_autocorr(&with_ar.y);
        assert!((rho - 0.8).abs() < 0.05, "lag-1 autocorrelation {rho}");
    }

    #[test]
    fn panel_has_block_structure() {
        let spec = DgpSpec::design(2, 4, 60).unwrap();
        let sim = generate_dgp(&spec).unwrap();
        assert_eq!(sim.panel.n_blocks(), 3);
        assert_eq!(sim.panel.n_series(), 12);
        assert_eq!(sim.panel.block_members(1), vec![0, 1, 2, 3]);
    }

    #[test]
    fn zero_mean_loadings_average_to_nothing() {
        let mut spec = DgpSpec::design(9, 400, 100).unwrap();
        spec.seed = 3;
        let sim = generate_dgp(&spec).unwrap();
        let lam = sim.lambda_bar();
        for v in lam.iter() {
            assert!(v.abs() < 0.2, "lambda_bar entry {v}");
        }
    }
}

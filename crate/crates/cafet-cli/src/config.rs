//! Flat key-value experiment configuration with an `include` directive.
//!
//! Grammar (one statement per line, `#` starts a comment):
//!
//! ```text
//! reps = 1000
//! level = 0.05
//! seed = 42
//! variance = conventional        # or hac
//! enhanced = true
//! stats = s1 s2 s3 s4
//! cell = dgp=2 N=200 T=200 tau=0.2 alpha=0      # repeatable
//! include = more_cells.cfg                      # repeatable, relative path
//! ```
//!
//! Cell keys: `dgp` (1..=9, required), `N`, `T` (required), and optional
//! `tau`, `alpha`, `m`, `r`, `h`, `gamma`.

use std::path::{Path, PathBuf};

use cafet_core::dgp::DgpSpec;
use cafet_core::stats::{StatId, VarianceMode};

use crate::CliError;

/// Parsed experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Replications per cell.
    pub reps: usize,
    /// One-sided significance level.
    pub level: f64,
    /// Master seed.
    pub seed: u64,
    /// Variance estimator.
    pub variance: VarianceMode,
    /// Apply the power enhancement to s2-s4.
    pub enhanced: bool,
    /// Statistics to evaluate.
    pub stats: Vec<StatId>,
    /// Simulation cells.
    pub cells: Vec<DgpSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            reps: 1000,
            level: 0.05,
            seed: 0,
            variance: VarianceMode::Conventional,
            enhanced: true,
            stats: StatId::ALL.to_vec(),
            cells: Vec::new(),
        }
    }
}

const MAX_INCLUDE_DEPTH: usize = 16;

/// Load a configuration file, following includes.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::default();
    parse_into(path, &mut config, 0)?;
    if config.cells.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no `cell =` lines found",
            path.display()
        )));
    }
    Ok(config)
}

fn parse_into(path: &Path, config: &mut ExperimentConfig, depth: usize) -> Result<(), CliError> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(CliError::Config(format!(
            "{}: include depth exceeds {MAX_INCLUDE_DEPTH} (cycle?)",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "{}:{}: expected `key = value`, got '{raw}'",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        let ctx = |msg: String| {
            CliError::Config(format!("{}:{}: {msg}", path.display(), lineno + 1))
        };
        match key {
            "reps" => {
                config.reps = value
                    .parse()
                    .map_err(|_| ctx(format!("bad reps '{value}'")))?
            }
            "level" => {
                config.level = value
                    .parse()
                    .map_err(|_| ctx(format!("bad level '{value}'")))?
            }
            "seed" => {
                config.seed = value
                    .parse()
                    .map_err(|_| ctx(format!("bad seed '{value}'")))?
            }
            "variance" => {
                config.variance = VarianceMode::parse(value)
                    .ok_or_else(|| ctx(format!("bad variance mode '{value}'")))?
            }
            "enhanced" => {
                config.enhanced = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    other => return Err(ctx(format!("bad enhanced flag '{other}'"))),
                }
            }
            "stats" => {
                let parsed: Option<Vec<StatId>> = value
                    .split([' ', ','])
                    .filter(|s| !s.is_empty())
                    .map(StatId::parse)
                    .collect();
                config.stats =
                    parsed.ok_or_else(|| ctx(format!("bad stats list '{value}'")))?;
                if config.stats.is_empty() {
                    return Err(ctx("empty stats list".into()));
                }
            }
            "cell" => config.cells.push(parse_cell(value).map_err(ctx)?),
            "include" => {
                let target = resolve_relative(path, value);
                parse_into(&target, config, depth + 1)?;
            }
            other => return Err(ctx(format!("unknown key '{other}'"))),
        }
    }
    Ok(())
}

fn resolve_relative(base: &Path, value: &str) -> PathBuf {
    let candidate = PathBuf::from(value);
    if candidate.is_absolute() {
        candidate
    } else {
        base.parent().unwrap_or(Path::new(".")).join(candidate)
    }
}

fn parse_cell(value: &str) -> Result<DgpSpec, String> {
    let mut dgp: Option<u8> = None;
    let mut n: Option<usize> = None;
    let mut t: Option<usize> = None;
    let mut fields: Vec<(String, String)> = Vec::new();
    for token in value.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| format!("cell token '{token}' is not key=value"))?;
        match k {
            "dgp" => dgp = Some(v.parse().map_err(|_| format!("bad dgp '{v}'"))?),
            "N" => n = Some(v.parse().map_err(|_| format!("bad N '{v}'"))?),
            "T" => t = Some(v.parse().map_err(|_| format!("bad T '{v}'"))?),
            _ => fields.push((k.to_string(), v.to_string())),
        }
    }
    let dgp = dgp.ok_or("cell is missing dgp=")?;
    let n = n.ok_or("cell is missing N=")?;
    let t = t.ok_or("cell is missing T=")?;
    let mut spec =
        DgpSpec::design(dgp, n, t).map_err(|e| format!("bad cell: {e}"))?;
    for (k, v) in fields {
        match k.as_str() {
            "tau" => spec.tau = v.parse().map_err(|_| format!("bad tau '{v}'"))?,
            "alpha" => spec.alpha = v.parse().map_err(|_| format!("bad alpha '{v}'"))?,
            "m" => spec.m = v.parse().map_err(|_| format!("bad m '{v}'"))?,
            "r" => spec.r = v.parse().map_err(|_| format!("bad r '{v}'"))?,
            "h" => spec.h = v.parse().map_err(|_| format!("bad h '{v}'"))?,
            "gamma" => spec.gamma = Some(v.parse().map_err(|_| format!("bad gamma '{v}'"))?),
            other => return Err(format!("unknown cell key '{other}'")),
        }
    }
    spec.validate().map_err(|e| format!("invalid cell: {e}"))?;
    Ok(spec)
}

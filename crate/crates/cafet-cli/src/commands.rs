//! Implementations of the CLI subcommands.

use std::path::Path;

use nalgebra::DMatrix;

use cafet_core::dgp::calibrate::calibrate_variance_constant;
use cafet_core::dgp::experiment::{run_experiment, ExperimentOptions};
use cafet_core::diagnostics::{
    cross_correlation_summary, eigenvalue_ratio_factors, serial_correlation_report,
};
use cafet_core::panel::{compute_block_averages, PanelDataset};
use cafet_core::pipeline::{
    build_treated_pair, flagged_predictor_subset, load_panel_csv, predictor_subset,
    treatment_log_csv, SeriesSchema, TreatedPair,
};
use cafet_core::recursive::nested_error_pair;
use cafet_core::stats::{
    evaluate_statistic, StatId, ThetaSource, TuningParams, VarianceMode,
};

use crate::config::{load_config, ExperimentConfig};
use crate::report::{simulation_markdown, test_csv, test_markdown, TestReportRow};
use crate::CliError;

/// Default eigenvalue-ratio search bound.
const R_MAX: usize = 8;

/// Ljung-Box lag order used in the diagnostics report.
const LB_LAGS: usize = 4;

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", out.display())))
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct SimulateOverrides {
    /// Replace the master seed.
    pub seed: Option<u64>,
    /// Replace the variance mode.
    pub variance: Option<VarianceMode>,
    /// Replace the significance level.
    pub level: Option<f64>,
    /// Replace the enhancement flag.
    pub enhanced: Option<bool>,
}

/// `cafet simulate`: run an experiment grid and write the rejection CSV plus
/// a Markdown summary.
pub fn cmd_simulate(
    config_path: &Path,
    out: &Path,
    overrides: &SimulateOverrides,
) -> Result<(), CliError> {
    let mut config: ExperimentConfig = load_config(config_path)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(v) = overrides.variance {
        config.variance = v;
    }
    if let Some(level) = overrides.level {
        config.level = level;
    }
    if let Some(e) = overrides.enhanced {
        config.enhanced = e;
    }
    ensure_out_dir(out)?;

    let opts = ExperimentOptions {
        reps: config.reps,
        level: config.level,
        stats: config.stats.clone(),
        variance_mode: config.variance,
        enhanced: config.enhanced,
        master_seed: config.seed,
    };
    let table = run_experiment(&config.cells, &opts)?;
    write_out(&out.join("rejections.csv"), &table.to_csv_string())?;
    write_out(
        &out.join("summary.md"),
        &simulation_markdown(&config.cells, &table),
    )?;
    println!(
        "wrote {} rows to {}",
        table.rows.len(),
        out.join("rejections.csv").display()
    );
    Ok(())
}

/// Options for the accuracy-test command.
#[derive(Debug, Clone)]
pub struct TestOptions {
    /// Forecast horizon.
    pub h: usize,
    /// Variance estimator.
    pub variance: VarianceMode,
    /// Significance level used for the bolding marker.
    pub level: f64,
    /// Apply the power enhancement to s2-s4.
    pub enhanced: bool,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            h: 1,
            variance: VarianceMode::Conventional,
            level: 0.10,
            enhanced: true,
        }
    }
}

fn stat_display(stat: StatId, enhanced: bool) -> String {
    if enhanced && stat.admits_enhancement() {
        format!("{stat}+")
    } else {
        stat.to_string()
    }
}

fn run_tests_on_panel(
    panel: &PanelDataset,
    schema: &[SeriesSchema],
    target: &str,
    opts: &TestOptions,
) -> Result<Vec<(String, f64)>, CliError> {
    let (predictors, y) = predictor_subset(panel, schema, target)?;
    let averages = compute_block_averages(&predictors)?;
    let t_len = y.len();
    let k0 = (0.25 * t_len as f64).floor() as usize;
    if t_len < k0 + opts.h || t_len - opts.h - k0 + 1 < 20 {
        return Err(CliError::Numerical(format!(
            "out-of-sample window too short after treatment: T = {t_len}, k0 = {k0}, h = {}; \
             need at least 20 evaluation points",
            opts.h
        )));
    }
    let w = DMatrix::from_column_slice(t_len, 1, &y);
    let pair = nested_error_pair(&y, &w, &averages.f_hat, k0, opts.h)?;
    let mut out = Vec::new();
    for stat in StatId::ALL {
        let tuning = TuningParams::default_for(stat);
        let enhanced = opts.enhanced && stat.admits_enhancement();
        let result = evaluate_statistic(
            &pair,
            stat,
            &tuning,
            opts.variance,
            enhanced,
            ThetaSource::Calibrated,
        )?;
        out.push((stat_display(stat, enhanced), result.p_value));
    }
    Ok(out)
}

/// `cafet test`: treated stationary/persistent pair, factor extraction with
/// the target excluded, nested pair against an AR(1) baseline, one p-value
/// row per panel kind.
pub fn cmd_test(
    data: &Path,
    schema_path: &Path,
    target: &str,
    out: &Path,
    opts: &TestOptions,
) -> Result<(), CliError> {
    let (raw, schema) = load_panel_csv(data, schema_path)?;
    if raw.series_index(target).is_none() {
        return Err(CliError::Data(format!(
            "target series '{target}' not present in {}",
            data.display()
        )));
    }
    let pair: TreatedPair = build_treated_pair(&raw, &schema)?;
    ensure_out_dir(out)?;

    let mut rows = Vec::new();
    for (label, panel) in [
        ("stationary", &pair.stationary),
        ("persistent", &pair.persistent),
    ] {
        rows.push(TestReportRow {
            dataset: label,
            p_values: run_tests_on_panel(panel, &pair.schema, target, opts)?,
        });
    }
    write_out(&out.join("tests.csv"), &test_csv(target, &rows, opts.level))?;
    write_out(
        &out.join("tests.md"),
        &test_markdown(target, &rows, opts.level),
    )?;
    write_out(&out.join("treatment_log.csv"), &treatment_log_csv(&pair.log))?;
    println!("wrote test report to {}", out.display());
    Ok(())
}

fn standardized_copy(panel: &PanelDataset) -> PanelDataset {
    let t_len = panel.n_periods();
    let mut values = panel.values.clone();
    for j in 0..values.ncols() {
        let mean = values.column(j).sum() / t_len as f64;
        let var = values
            .column(j)
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / t_len as f64;
        let sd = var.sqrt().max(1e-12);
        for t in 0..t_len {
            values[(t, j)] = (values[(t, j)] - mean) / sd;
        }
    }
    PanelDataset::new(
        values,
        panel.block_of.clone(),
        panel.series_names.clone(),
        panel.time_index.clone(),
    )
    .expect("standardizing preserves panel invariants")
}

/// Residuals of each series on the block averages (with intercept).
fn factor_residuals(panel: &PanelDataset) -> Result<DMatrix<f64>, CliError> {
    let averages = compute_block_averages(panel)?;
    let t_len = panel.n_periods();
    let m = averages.m;
    let mut design = DMatrix::<f64>::zeros(t_len, m + 1);
    for t in 0..t_len {
        design[(t, 0)] = 1.0;
        for k in 0..m {
            design[(t, k + 1)] = averages.f_hat[(t, k)];
        }
    }
    let gram = design.transpose() * &design;
    let inv = gram.try_inverse().ok_or_else(|| {
        CliError::Numerical("singular factor design in diagnostics".into())
    })?;
    let hat = &design * inv * design.transpose();
    let fitted = &hat * &panel.values;
    Ok(&panel.values - fitted)
}

/// `cafet diagnose`: factor-count estimate plus serial- and
/// cross-correlation summaries for the stationary and persistent panels.
pub fn cmd_diagnose(data: &Path, schema_path: &Path, out: &Path) -> Result<(), CliError> {
    let (raw, schema) = load_panel_csv(data, schema_path)?;
    let pair = build_treated_pair(&raw, &schema)?;
    ensure_out_dir(out)?;

    let mut csv = String::from("dataset,ER,SC,Abs SC,XC,Abs XC\n");
    let mut md = String::from(
        "# Panel diagnostics\n\n| dataset | ER | SC | Abs SC | XC | Abs XC |\n|---|---|---|---|---|---|\n",
    );
    for (label, panel) in [
        ("stationary", &pair.stationary),
        ("persistent", &pair.persistent),
    ] {
        let predictors = flagged_predictor_subset(panel, &pair.schema)?;
        let standardized = standardized_copy(&predictors);
        let r_max = R_MAX.min(standardized.n_periods().min(standardized.n_series()) - 1);
        let er = eigenvalue_ratio_factors(&standardized, r_max)?;
        let residuals = factor_residuals(&predictors)?;
        let lags = LB_LAGS.min(predictors.n_periods() / 2 - 1);
        let sc = serial_correlation_report(&residuals, lags)?;
        let xc = cross_correlation_summary(&residuals)?;
        csv.push_str(&format!(
            "{label},{},{:.3},{:.3},{:.3},{:.3}\n",
            er.k_hat, sc.mean_sc, sc.mean_abs_sc, xc.mean_xc, xc.mean_abs_xc
        ));
        md.push_str(&format!(
            "| {label} | {} | {:.3} | {:.3} | {:.3} | {:.3} |\n",
            er.k_hat, sc.mean_sc, sc.mean_abs_sc, xc.mean_xc, xc.mean_abs_xc
        ));
    }
    write_out(&out.join("diagnostics.csv"), &csv)?;
    write_out(&out.join("diagnostics.md"), &md)?;
    println!("wrote diagnostics to {}", out.display());
    Ok(())
}

/// `cafet calibrate`: regenerate the variance constants with provenance.
pub fn cmd_calibrate(
    reps: usize,
    n_grid: &[usize],
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut lines = String::from("stat,theta,reps_per_n,n_grid,seed\n");
    for stat in StatId::ALL {
        let tuning = TuningParams::default_for(stat);
        let outcome = calibrate_variance_constant(stat, &tuning, reps, n_grid, seed)?;
        let grid: Vec<String> = n_grid.iter().map(|n| n.to_string()).collect();
        println!(
            "{stat}: theta = {:.16e} (per-n: {:?})",
            outcome.theta, outcome.per_n
        );
        lines.push_str(&format!(
            "{stat},{:.16e},{reps},{},{seed}\n",
            outcome.theta,
            grid.join(" ")
        ));
    }
    if let Some(out) = out {
        ensure_out_dir(out)?;
        write_out(&out.join("calibrated_thetas.csv"), &lines)?;
    }
    Ok(())
}

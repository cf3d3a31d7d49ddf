//! Imputation, outlier screening, and the stationary/persistent panel pair.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::panel::PanelDataset;
use crate::pipeline::{apply_transform, transform_order, RawPanel, SeriesSchema};

/// Minimum observed fraction for a series to survive treatment.
pub const MIN_OBSERVED_FRACTION: f64 = 0.5;

/// Outlier rule: |x - median| > OUTLIER_IQR_MULTIPLE * IQR is clipped.
pub const OUTLIER_IQR_MULTIPLE: f64 = 10.0;

/// Kind of treatment applied to one cell (or one series).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreatmentKind {
    /// Interior gap filled by linear interpolation.
    ImputedInterior,
    /// Leading/trailing gap filled with the nearest observed value.
    ImputedEdge,
    /// Outlier replaced by the clip boundary.
    ClippedOutlier,
    /// Series dropped for insufficient coverage.
    ExcludedSeries,
}

impl TreatmentKind {
    fn as_str(&self) -> &'static str {
        match self {
            TreatmentKind::ImputedInterior => "imputed_interior",
            TreatmentKind::ImputedEdge => "imputed_edge",
            TreatmentKind::ClippedOutlier => "clipped_outlier",
            TreatmentKind::ExcludedSeries => "excluded_series",
        }
    }
}

/// One logged treatment action.
#[derive(Debug, Clone)]
pub struct TreatmentAction {
    /// Series the action applied to.
    pub series: String,
    /// Time label (empty for series-level actions).
    pub time: String,
    /// What happened.
    pub action: TreatmentKind,
    /// Previous value if any.
    pub old: Option<f64>,
    /// New value if any.
    pub new: Option<f64>,
}

/// Render the treatment log as CSV (series, time, action, old, new).
pub fn treatment_log_csv(log: &[TreatmentAction]) -> String {
    let mut out = String::from("series,time,action,old,new\n");
    for a in log {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            a.series,
            a.time,
            a.action.as_str(),
            a.old.map(|v| v.to_string()).unwrap_or_default(),
            a.new.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    out
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    // Linear interpolation between order statistics.
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

struct ScreenedSeries {
    values: Vec<f64>,
    actions: Vec<TreatmentAction>,
}

fn screen_series(name: &str, time: &[String], column: &[Option<f64>]) -> Option<ScreenedSeries> {
    let observed: Vec<f64> = column.iter().flatten().copied().collect();
    if (observed.len() as f64) < MIN_OBSERVED_FRACTION * column.len() as f64 {
        return None;
    }
    let mut actions = Vec::new();

    // Outliers first, judged on the observed values so a spike next to a
    // gap cannot leak into the interpolation.
    let mut sorted = observed.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = quantile_sorted(&sorted, 0.5);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let mut clipped: Vec<Option<f64>> = column.to_vec();
    if iqr > 0.0 {
        let band = OUTLIER_IQR_MULTIPLE * iqr;
        for (t, cell) in clipped.iter_mut().enumerate() {
            if let Some(v) = *cell {
                if (v - median).abs() > band {
                    let bounded = median + band * (v - median).signum();
                    actions.push(TreatmentAction {
                        series: name.to_string(),
                        time: time[t].clone(),
                        action: TreatmentKind::ClippedOutlier,
                        old: Some(v),
                        new: Some(bounded),
                    });
                    *cell = Some(bounded);
                }
            }
        }
    }

    // Gaps: interior by linear interpolation, edges by nearest observed.
    let t_len = clipped.len();
    let mut values = vec![0.0f64; t_len];
    let obs_idx: Vec<usize> = (0..t_len).filter(|&t| clipped[t].is_some()).collect();
    let first = obs_idx[0];
    let last = *obs_idx.last().unwrap();
    for t in 0..t_len {
        match clipped[t] {
            Some(v) => values[t] = v,
            None => {
                let (filled, kind) = if t < first {
                    (clipped[first].unwrap(), TreatmentKind::ImputedEdge)
                } else if t > last {
                    (clipped[last].unwrap(), TreatmentKind::ImputedEdge)
                } else {
                    let prev = *obs_idx.iter().rev().find(|&&i| i < t).unwrap();
                    let next = *obs_idx.iter().find(|&&i| i > t).unwrap();
                    let (a, b) = (clipped[prev].unwrap(), clipped[next].unwrap());
                    let frac = (t - prev) as f64 / (next - prev) as f64;
                    (a + frac * (b - a), TreatmentKind::ImputedInterior)
                };
                actions.push(TreatmentAction {
                    series: name.to_string(),
                    time: time[t].clone(),
                    action: kind,
                    old: None,
                    new: Some(filled),
                });
                values[t] = filled;
            }
        }
    }
    Some(ScreenedSeries { values, actions })
}

/// Impute gaps and clip outliers, producing a complete panel plus the
/// treatment log. Series below the coverage threshold are excluded and
/// logged, never silently dropped; block ids are remapped to consecutive
/// 1..=m preserving numeric order.
pub fn impute_and_screen(
    raw: &RawPanel,
    schema: &[SeriesSchema],
) -> Result<(PanelDataset, Vec<SeriesSchema>, Vec<TreatmentAction>)> {
    if schema.len() != raw.n_series() {
        return Err(Error::DimensionMismatch {
            context: "schema vs panel series",
            expected: raw.n_series(),
            actual: schema.len(),
        });
    }
    let mut log = Vec::new();
    let mut kept_columns: Vec<Vec<f64>> = Vec::new();
    let mut kept_schema: Vec<SeriesSchema> = Vec::new();
    let mut kept_names: Vec<String> = Vec::new();
    for (j, sch) in schema.iter().enumerate() {
        match screen_series(&sch.name, &raw.time_index, &raw.columns[j]) {
            Some(mut screened) => {
                log.append(&mut screened.actions);
                kept_columns.push(screened.values);
                kept_schema.push(sch.clone());
                kept_names.push(sch.name.clone());
            }
            None => log.push(TreatmentAction {
                series: sch.name.clone(),
                time: String::new(),
                action: TreatmentKind::ExcludedSeries,
                old: None,
                new: None,
            }),
        }
    }
    if kept_columns.is_empty() {
        return Err(Error::Data("no series survived treatment".into()));
    }

    // Remap block ids compactly.
    let mut block_map = BTreeMap::new();
    for sch in &kept_schema {
        let next = block_map.len() + 1;
        block_map.entry(sch.block).or_insert(next);
    }
    let block_of: Vec<usize> = kept_schema.iter().map(|s| block_map[&s.block]).collect();
    let mut kept_schema_remapped = kept_schema.clone();
    for (sch, &b) in kept_schema_remapped.iter_mut().zip(&block_of) {
        sch.block = b;
    }

    let t_len = raw.n_periods();
    let values = DMatrix::from_fn(t_len, kept_columns.len(), |t, j| kept_columns[j][t]);
    let panel = PanelDataset::new(values, block_of, kept_names, raw.time_index.clone())?;
    Ok((panel, kept_schema_remapped, log))
}

/// The fully treated stationary/persistent panel pair.
#[derive(Debug, Clone)]
pub struct TreatedPair {
    /// Transformed, standardized panel.
    pub stationary: PanelDataset,
    /// Treated level panel on the same window.
    pub persistent: PanelDataset,
    /// Schema rows for the surviving series (blocks remapped).
    pub schema: Vec<SeriesSchema>,
    /// Per-series (mean, sd) removed from the stationary panel.
    pub scaling: Vec<(String, f64, f64)>,
    /// Everything that was imputed, clipped, or excluded.
    pub log: Vec<TreatmentAction>,
}

/// Chain treatment and transformation: impute/screen the levels, apply the
/// per-series stationarity transform, align all series on the common window
/// set by the largest differencing order, and standardize the stationary
/// panel to zero mean and unit variance (recording the scaling). The
/// persistent panel holds the treated levels on the same window.
pub fn build_treated_pair(raw: &RawPanel, schema: &[SeriesSchema]) -> Result<TreatedPair> {
    let (levels, kept_schema, log) = impute_and_screen(raw, schema)?;
    let t_len = levels.n_periods();
    let max_order = kept_schema
        .iter()
        .map(|s| transform_order(s.tcode))
        .max()
        .unwrap_or(0);
    if t_len <= max_order + 2 {
        return Err(Error::TooFewObservations {
            context: "treated panel",
            required: max_order + 3,
            actual: t_len,
        });
    }
    let window = t_len - max_order;

    let mut stationary = DMatrix::<f64>::zeros(window, levels.n_series());
    let mut persistent = DMatrix::<f64>::zeros(window, levels.n_series());
    let mut scaling = Vec::with_capacity(levels.n_series());
    for (j, sch) in kept_schema.iter().enumerate() {
        let column: Vec<f64> = levels.values.column(j).iter().copied().collect();
        let transformed = apply_transform(&column, sch.tcode)?;
        let order = transform_order(sch.tcode);
        // transformed[k] sits at original time k + order; keep times
        // max_order..t_len.
        let offset = max_order - order;
        let slice = &transformed[offset..];
        debug_assert_eq!(slice.len(), window);
        let mean = slice.iter().sum::<f64>() / window as f64;
        let var = slice.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / window as f64;
        let sd = var.sqrt();
        let sd_safe = if sd > 0.0 { sd } else { 1.0 };
        for t in 0..window {
            stationary[(t, j)] = (slice[t] - mean) / sd_safe;
            persistent[(t, j)] = column[max_order + t];
        }
        scaling.push((sch.name.clone(), mean, sd_safe));
    }

    let names: Vec<String> = kept_schema.iter().map(|s| s.name.clone()).collect();
    let time: Vec<String> = levels.time_index[max_order..].to_vec();
    let block_of: Vec<usize> = kept_schema.iter().map(|s| s.block).collect();
    let stationary =
        PanelDataset::new(stationary, block_of.clone(), names.clone(), time.clone())?;
    let persistent = PanelDataset::new(persistent, block_of, names, time)?;
    Ok(TreatedPair {
        stationary,
        persistent,
        schema: kept_schema,
        scaling,
        log,
    })
}

/// Predictor subset of a treated panel: drop every target-flagged series
/// and the named target itself, remapping blocks compactly. Returns the
/// predictor panel and the target column.
pub fn predictor_subset(
    panel: &PanelDataset,
    schema: &[SeriesSchema],
    target: &str,
) -> Result<(PanelDataset, Vec<f64>)> {
    let target_idx = panel
        .series_names
        .iter()
        .position(|n| n == target)
        .ok_or_else(|| Error::Data(format!("target series '{target}' not found")))?;
    let y: Vec<f64> = panel.values.column(target_idx).iter().copied().collect();
    let predictors = subset_excluding(panel, schema, Some(target_idx))?;
    Ok((predictors, y))
}

/// Predictor panel with all target-flagged series removed (no named target).
pub fn flagged_predictor_subset(
    panel: &PanelDataset,
    schema: &[SeriesSchema],
) -> Result<PanelDataset> {
    subset_excluding(panel, schema, None)
}

fn subset_excluding(
    panel: &PanelDataset,
    schema: &[SeriesSchema],
    drop_idx: Option<usize>,
) -> Result<PanelDataset> {
    let keep: Vec<usize> = (0..panel.n_series())
        .filter(|&j| Some(j) != drop_idx && !schema[j].target)
        .collect();
    if keep.is_empty() {
        return Err(Error::Data("no predictor series left after removing targets".into()));
    }
    let mut block_map = BTreeMap::new();
    for &j in &keep {
        let next = block_map.len() + 1;
        block_map.entry(schema[j].block).or_insert(next);
    }
    let values = DMatrix::from_fn(panel.n_periods(), keep.len(), |t, c| {
        panel.values[(t, keep[c])]
    });
    let block_of: Vec<usize> = keep.iter().map(|&j| block_map[&schema[j].block]).collect();
    let names: Vec<String> = keep.iter().map(|&j| panel.series_names[j].clone()).collect();
    PanelDataset::new(values, block_of, names, panel.time_index.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_from(columns: Vec<Vec<Option<f64>>>) -> RawPanel {
        let t = columns[0].len();
        RawPanel {
            series_names: (0..columns.len()).map(|j| format!("s{j}")).collect(),
            time_index: (1..=t).map(|t| t.to_string()).collect(),
            columns,
        }
    }

    fn plain_schema(n: usize, tcode: u8) -> Vec<SeriesSchema> {
        (0..n)
            .map(|j| SeriesSchema {
                name: format!("s{j}"),
                block: 1 + j % 2,
                tcode,
                target: false,
            })
            .collect()
    }

    #[test]
    fn clean_panel_passes_through_with_empty_log() {
        let cols = vec![
            (1..=30).map(|t| Some(t as f64)).collect::<Vec<_>>(),
            (1..=30).map(|t| Some((t as f64).sin())).collect(),
        ];
        let raw = raw_from(cols);
        let (panel, _, log) = impute_and_screen(&raw, &plain_schema(2, 1)).unwrap();
        assert!(log.is_empty());
        assert_eq!(panel.values[(4, 0)], 5.0);
    }

    #[test]
    fn interior_gap_is_linearly_interpolated() {
        let mut col: Vec<Option<f64>> = (1..=20).map(|t| Some(t as f64)).collect();
        col[10] = None; // between 10 and 12 -> 11
        let raw = raw_from(vec![col]);
        let (panel, _, log) = impute_and_screen(&raw, &plain_schema(1, 1)).unwrap();
        assert_eq!(panel.values[(10, 0)], 11.0);
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].action, TreatmentKind::ImputedInterior);
    }

    #[test]
    fn planted_spike_is_clipped_once() {
        let mut col: Vec<Option<f64>> = (0..40).map(|t| Some((t % 7) as f64)).collect();
        col[20] = Some(1e6); // far beyond 100 IQRs
        let raw = raw_from(vec![col]);
        let (panel, _, log) = impute_and_screen(&raw, &plain_schema(1, 1)).unwrap();
        let clips: Vec<_> = log
            .iter()
            .filter(|a| a.action == TreatmentKind::ClippedOutlier)
            .collect();
        assert_eq!(clips.len(), 1);
        assert!(panel.values[(20, 0)] < 1e3);
    }

    #[test]
    fn sparse_series_is_excluded_and_logged() {
        let sparse: Vec<Option<f64>> = (0..20)
            .map(|t| if t < 5 { Some(t as f64) } else { None })
            .collect();
        let full: Vec<Option<f64>> = (0..20).map(|t| Some(t as f64)).collect();
        let raw = raw_from(vec![sparse, full]);
        let mut schema = plain_schema(2, 1);
        schema[0].block = 1;
        schema[1].block = 1;
        let (panel, _, log) = impute_and_screen(&raw, &schema).unwrap();
        assert_eq!(panel.n_series(), 1);
        assert!(log
            .iter()
            .any(|a| a.action == TreatmentKind::ExcludedSeries && a.series == "s0"));
    }

    #[test]
    fn treatment_is_idempotent() {
        let mut col: Vec<Option<f64>> = (0..50).map(|t| Some(((t * 13) % 17) as f64)).collect();
        col[7] = None;
        col[30] = Some(5e4);
        let raw = raw_from(vec![col]);
        let schema = plain_schema(1, 1);
        let (panel, _, _) = impute_and_screen(&raw, &schema).unwrap();

        let again = RawPanel {
            columns: vec![panel.values.column(0).iter().map(|v| Some(*v)).collect()],
            series_names: vec!["s0".into()],
            time_index: panel.time_index.clone(),
        };
        let (panel2, _, log2) = impute_and_screen(&again, &schema).unwrap();
        assert!(log2.is_empty(), "second pass acted: {log2:?}");
        assert_eq!(panel.values, panel2.values);
    }

    #[test]
    fn all_level_panel_keeps_raw_as_persistent() {
        let cols = vec![
            (1..=25).map(|t| Some(t as f64 + 0.5)).collect::<Vec<_>>(),
            (1..=25).map(|t| Some((t as f64 * 0.3).cos() + 2.0)).collect(),
        ];
        let raw = raw_from(cols);
        let pair = build_treated_pair(&raw, &plain_schema(2, 1)).unwrap();
        assert_eq!(pair.persistent.values[(3, 0)], 4.5);
        // Stationary columns are standardized.
        for j in 0..2 {
            let col = pair.stationary.values.column(j);
            let mean = col.sum() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn synthetic_panel_round_trips_to_levels() {
        // Mixed tcodes; persistent panel must reproduce the treated levels.
        let t_len = 40;
        let cols: Vec<Vec<Option<f64>>> = (0..3)
            .map(|j| {
                (0..t_len)
                    .map(|t| Some(2.0 + (t as f64 * 0.1 + j as f64).sin().abs() + t as f64 * 0.05))
                    .collect()
            })
            .collect();
        let raw = raw_from(cols.clone());
        let mut schema = plain_schema(3, 1);
        schema[0].tcode = 5;
        schema[1].tcode = 2;
        schema[2].tcode = 1;
        let pair = build_treated_pair(&raw, &schema).unwrap();
        let max_order = 1;
        for (j, col) in cols.iter().enumerate() {
            for t in 0..t_len - max_order {
                let want = col[t + max_order].unwrap();
                let got = pair.persistent.values[(t, j)];
                assert!((got - want).abs() < 1e-8, "series {j} t {t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn target_exclusion_contract() {
        let cols: Vec<Vec<Option<f64>>> = (0..4)
            .map(|j| (0..30).map(|t| Some((t + j) as f64)).collect())
            .collect();
        let raw = raw_from(cols);
        let mut schema = plain_schema(4, 1);
        schema[2].target = true;
        let pair = build_treated_pair(&raw, &schema).unwrap();
        let (predictors, y) = predictor_subset(&pair.persistent, &pair.schema, "s2").unwrap();
        assert_eq!(predictors.n_series(), 3);
        assert!(!predictors.series_names.contains(&"s2".to_string()));
        assert_eq!(y.len(), 30);
    }
}

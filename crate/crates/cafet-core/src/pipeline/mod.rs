//! Ingestion of block-structured CSV macro panels.
//!
//! Two files describe a dataset:
//!
//! - the data CSV: a header row of series names with the first column
//!   holding time labels, numeric cells, empty cell = missing;
//! - the schema CSV: `name,block,tcode,target` rows assigning each series a
//!   block id, a stationarity transform code, and a target flag.
//!
//! Both files are UTF-8, comma-separated, '.' decimal.

mod transform;
mod treat;

pub use transform::{apply_transform, invert_transform, transform_order};
pub use treat::{
    build_treated_pair, flagged_predictor_subset, impute_and_screen, predictor_subset,
    treatment_log_csv, TreatedPair, TreatmentAction, TreatmentKind,
};

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-series metadata from the schema file.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSchema {
    /// Series name, matching a data-file column.
    pub name: String,
    /// Block id (positive; remapped to consecutive ids at panel build).
    pub block: usize,
    /// Transform code 1..=7: level, diff, double diff, log, log diff,
    /// double log diff, diff of percent change.
    pub tcode: u8,
    /// Whether the series is a forecast target (excluded from the
    /// predictor panel).
    pub target: bool,
}

/// A raw panel as loaded: column-major with per-cell missingness.
#[derive(Debug, Clone)]
pub struct RawPanel {
    /// One vector per series; `None` marks a missing cell.
    pub columns: Vec<Vec<Option<f64>>>,
    /// Series names in file order.
    pub series_names: Vec<String>,
    /// Time labels in file order.
    pub time_index: Vec<String>,
}

impl RawPanel {
    /// Number of periods.
    pub fn n_periods(&self) -> usize {
        self.time_index.len()
    }

    /// Number of series.
    pub fn n_series(&self) -> usize {
        self.series_names.len()
    }

    /// Index of a series by name.
    pub fn series_index(&self, name: &str) -> Option<usize> {
        self.series_names.iter().position(|n| n == name)
    }
}

/// Load and align a data/schema file pair.
///
/// The returned schema is reordered to match the data columns. Unknown
/// series on either side, duplicate names, ragged rows, and non-numeric
/// cells are structural errors naming the offenders.
pub fn load_panel_csv(
    data_path: impl AsRef<Path>,
    schema_path: impl AsRef<Path>,
) -> Result<(RawPanel, Vec<SeriesSchema>)> {
    let raw = read_data_csv(data_path.as_ref())?;
    let schema = read_schema_csv(schema_path.as_ref())?;

    let data_names: HashSet<&str> = raw.series_names.iter().map(|s| s.as_str()).collect();
    let schema_names: HashSet<&str> = schema.iter().map(|s| s.name.as_str()).collect();
    let missing_in_schema: Vec<&str> = raw
        .series_names
        .iter()
        .map(|s| s.as_str())
        .filter(|n| !schema_names.contains(n))
        .collect();
    let missing_in_data: Vec<&str> = schema
        .iter()
        .map(|s| s.name.as_str())
        .filter(|n| !data_names.contains(n))
        .collect();
    if !missing_in_schema.is_empty() || !missing_in_data.is_empty() {
        return Err(Error::Data(format!(
            "series mismatch: not in schema: [{}]; not in data: [{}]",
            missing_in_schema.join(", "),
            missing_in_data.join(", ")
        )));
    }

    let aligned: Vec<SeriesSchema> = raw
        .series_names
        .iter()
        .map(|name| {
            schema
                .iter()
                .find(|s| &s.name == name)
                .expect("checked above")
                .clone()
        })
        .collect();
    Ok((raw, aligned))
}

fn read_data_csv(path: &Path) -> Result<RawPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_path(path)?;
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty file", path.display())))??;
    if header.len() < 2 {
        return Err(Error::Data(format!(
            "{}: need a time column plus at least one series",
            path.display()
        )));
    }
    let series_names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    let dupes: Vec<&String> = series_names.iter().filter(|n| !seen.insert(n.as_str())).collect();
    if !dupes.is_empty() {
        return Err(Error::Data(format!(
            "{}: duplicate series names: {}",
            path.display(),
            dupes.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        )));
    }

    let n_series = series_names.len();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); n_series];
    let mut time_index = Vec::new();
    for (row_idx, record) in records.enumerate() {
        let record = record.map_err(|e| {
            Error::Data(format!("{}: ragged or malformed row {}: {e}", path.display(), row_idx + 2))
        })?;
        if record.len() != n_series + 1 {
            return Err(Error::Data(format!(
                "{}: row {} has {} cells, expected {}",
                path.display(),
                row_idx + 2,
                record.len(),
                n_series + 1
            )));
        }
        time_index.push(record[0].trim().to_string());
        for (j, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                columns[j].push(None);
            } else {
                let value: f64 = cell.parse().map_err(|_| {
                    Error::Data(format!(
                        "{}: non-numeric cell '{}' at row {}, series {}",
                        path.display(),
                        cell,
                        row_idx + 2,
                        series_names[j]
                    ))
                })?;
                columns[j].push(Some(value));
            }
        }
    }
    if time_index.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(RawPanel {
        columns,
        series_names,
        time_index,
    })
}

fn read_schema_csv(path: &Path) -> Result<Vec<SeriesSchema>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 4 {
            return Err(Error::Data(format!(
                "{}: schema row {} needs name,block,tcode,target",
                path.display(),
                row_idx + 2
            )));
        }
        let name = record[0].trim().to_string();
        if !seen.insert(name.clone()) {
            return Err(Error::Data(format!(
                "{}: duplicate schema entry for {}",
                path.display(),
                name
            )));
        }
        let block: usize = record[1].trim().parse().map_err(|_| {
            Error::Data(format!("{}: bad block id '{}' for {}", path.display(), &record[1], name))
        })?;
        if block == 0 {
            return Err(Error::Data(format!(
                "{}: block ids are 1-based, got 0 for {}",
                path.display(),
                name
            )));
        }
        let tcode: u8 = record[2].trim().parse().map_err(|_| {
            Error::Data(format!("{}: bad tcode '{}' for {}", path.display(), &record[2], name))
        })?;
        if !(1..=7).contains(&tcode) {
            return Err(Error::Data(format!(
                "{}: tcode must be 1..=7, got {} for {}",
                path.display(),
                tcode,
                name
            )));
        }
        let target = matches!(record[3].trim(), "1" | "true" | "TRUE" | "True");
        out.push(SeriesSchema {
            name,
            block,
            tcode,
            target,
        });
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{}: empty schema", path.display())));
    }
    Ok(out)
}

/// Write a raw panel back to CSV (empty cell = missing, full-precision
/// shortest round-trip formatting).
pub fn write_panel_csv(panel: &RawPanel, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["time".to_string()];
    header.extend(panel.series_names.iter().cloned());
    writer.write_record(&header)?;
    for (t, label) in panel.time_index.iter().enumerate() {
        let mut row = vec![label.clone()];
        for col in &panel.columns {
            row.push(match col[t] {
                Some(v) => format!("{v}"),
                None => String::new(),
            });
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write a schema to CSV.
pub fn write_schema_csv(schema: &[SeriesSchema], path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["name", "block", "tcode", "target"])?;
    for s in schema {
        writer.write_record([
            s.name.as_str(),
            &s.block.to_string(),
            &s.tcode.to_string(),
            if s.target { "1" } else { "0" },
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Aggregate a monthly series to quarterly frequency by the arithmetic mean
/// of each consecutive triple (trailing partial quarters are dropped; the
/// flow/stock distinction is not encoded).
pub fn monthly_to_quarterly_mean(series: &[f64]) -> Vec<f64> {
    series
        .chunks_exact(3)
        .map(|q| (q[0] + q[1] + q[2]) / 3.0)
        .collect()
}

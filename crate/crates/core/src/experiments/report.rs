//! Experiment output: a flat record table plus a JSON summary.
//!
//! Reports are written as `<scenario-id>.<kind>.csv` (one row per record)
//! and `<scenario-id>.summary.json`. Numbers are printed in Rust's shortest
//! round-trip form, so a rerun with the same scenario and seed produces
//! byte-identical files and every value parses back exactly.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(v) => write!(f, "{v}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Records and summary statistics of one scenario run. Record order is the
/// deterministic grid order of the scenario, never execution order.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario_id: String,
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: serde_json::Value,
}

impl RunReport {
    pub fn new(scenario_id: &str, kind: &str, columns: &[&str]) -> Self {
        RunReport {
            scenario_id: scenario_id.to_string(),
            kind: kind.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// Values of one column as floats; non-numeric cells are skipped.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("no column `{name}`"));
        self.rows
            .iter()
            .filter_map(|row| match &row[idx] {
                Cell::Float(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }

    pub fn csv_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(',');
                }
                let _ = write!(out, "{cell}");
                first = false;
            }
            out.push('\n');
        }
        out.into_bytes()
    }

    pub fn csv_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.{}.csv", self.scenario_id, self.kind))
    }

    pub fn summary_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.summary.json", self.scenario_id))
    }

    /// Write `<id>.<kind>.csv` and `<id>.summary.json` under `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = self.csv_path(dir);
        std::fs::File::create(&csv)?.write_all(&self.csv_bytes())?;
        let json = self.summary_path(dir);
        let pretty = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        std::fs::File::create(&json)?.write_all(pretty.as_bytes())?;
        Ok((csv, json))
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Max adjacent jump over median adjacent jump of a curve sampled on an
/// ordered grid. Undefined (None) for fewer than three points or a flat
/// curve with zero median jump.
pub fn smoothness_metric(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let mut jumps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let max = jumps.iter().cloned().fold(0.0, f64::max);
    jumps.sort_by(|a, b| a.partial_cmp(b).expect("finite jumps"));
    let med = median_sorted(&jumps);
    if med == 0.0 {
        return None;
    }
    Some(max / med)
}

/// Count of values outside the Tukey fence q1 - k*IQR .. q3 + k*IQR.
pub fn tukey_outliers(values: &[f64], k: f64) -> usize {
    if values.len() < 4 {
        return 0;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let q = |p: f64| -> f64 {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    let (q1, q3) = (q(0.25), q(0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - k * iqr, q3 + k * iqr);
    values.iter().filter(|&&v| v < lo || v > hi).count()
}

//! Experiment reports: long-format rows written as CSV or JSON.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::plan::Metric;

/// One metric value for one cell.
///
/// Columns not relevant to a metric are empty (`None`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub method: String,
    pub distribution: String,
    pub covariance: String,
    pub temporal: String,
    pub n: usize,
    pub p: usize,
    pub boundary: usize,
    pub signal: String,
    pub delta: f64,
    pub change_fraction: Option<f64>,
    pub theta: Option<f64>,
    pub truncation: Option<usize>,
    pub metric: String,
    pub alpha: Option<f64>,
    pub value: f64,
    /// Monte Carlo standard error, when one is defined.
    pub se: Option<f64>,
    pub replicates: usize,
}

/// Stream bookkeeping for one noise cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub scenario: String,
    /// Root of the per-replicate substreams of this cell.
    pub stream: u64,
    pub oracle_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: Metric,
    pub seed: u64,
    pub replicates: usize,
    pub draws: usize,
    pub boundary: usize,
    pub alpha: f64,
    /// Levels at which rejection rates and the error in size were evaluated.
    pub alpha_grid: Vec<f64>,
    pub cells: Vec<CellRecord>,
    pub rows: Vec<ReportRow>,
    pub wall_time_seconds: f64,
}

impl ExperimentReport {
    /// Rows with the given metric name, in report order.
    pub fn rows_with_metric<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a ReportRow> {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    /// CSV text of the rows; excludes wall time so reruns compare byte for byte.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<stem>.csv` and `<stem>.json`, returning both paths.
    pub fn write_files(&self, stem: &Path) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
        let csv_path = stem.with_extension("csv");
        let json_path = stem.with_extension("json");
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        std::fs::write(&json_path, self.to_json_string()? + "\n")?;
        Ok((csv_path, json_path))
    }
}

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 18] = [
    "experiment",
    "method",
    "distribution",
    "covariance",
    "temporal",
    "n",
    "p",
    "boundary",
    "signal",
    "delta",
    "change_fraction",
    "theta",
    "truncation",
    "metric",
    "alpha",
    "value",
    "se",
    "replicates",
];

/// `sqrt(p (1 - p) / R)`.
pub fn proportion_se(p_hat: f64, replicates: usize) -> f64 {
    (p_hat * (1.0 - p_hat) / replicates as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(metric: &str, value: f64) -> ReportRow {
        ReportRow {
            experiment: "size".into(),
            method: "bootstrap_cusum".into(),
            distribution: "gaussian".into(),
            covariance: "I".into(),
            temporal: "iid".into(),
            n: 10,
            p: 2,
            boundary: 1,
            signal: "none".into(),
            delta: 0.0,
            change_fraction: None,
            theta: None,
            truncation: None,
            metric: metric.into(),
            alpha: Some(0.05),
            value,
            se: Some(0.01),
            replicates: 10,
        }
    }

    fn report(rows: Vec<ReportRow>) -> ExperimentReport {
        ExperimentReport {
            experiment: Metric::Size,
            seed: 1,
            replicates: 10,
            draws: 5,
            boundary: 1,
            alpha: 0.05,
            alpha_grid: vec![0.05],
            cells: vec![],
            rows,
            wall_time_seconds: 1.5,
        }
    }

    #[test]
    fn csv_header_matches_columns() {
        let csv = report(vec![row("size", 0.1)]).to_csv_string().unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(header, CSV_COLUMNS.join(","));
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), CSV_COLUMNS.len());
        assert!(!csv.contains("1.5"));
        let empty = report(vec![]).to_csv_string().unwrap();
        assert_eq!(empty.trim_end(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn json_round_trip() {
        let r = report(vec![row("size", 0.1), row("sup_error_in_size", 0.2)]);
        let back: ExperimentReport = serde_json::from_str(&r.to_json_string().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.rows_with_metric("size").count(), 1);
    }

    #[test]
    fn binomial_se() {
        assert_eq!(proportion_se(0.0, 100), 0.0);
        assert!((proportion_se(0.5, 100) - 0.05).abs() < 1e-15);
    }
}

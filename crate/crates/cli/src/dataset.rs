//! Tabular datasets and their CSV / JSON encodings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::Scenario;
use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureDataset {
    pub figure: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl FigureDataset {
    pub fn new(figure: &str, columns: &[&str]) -> Self {
        Self {
            figure: figure.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width for {}",
            self.figure
        );
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self
            .column_index(name)
            .unwrap_or_else(|| panic!("{} has no column {name}", self.figure));
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// Rows whose `name` column equals `value` exactly.
    pub fn filter(&self, name: &str, value: f64) -> Vec<&Vec<f64>> {
        let i = self.column_index(name).expect("known column");
        self.rows.iter().filter(|r| r[i] == value).collect()
    }

    pub fn validate(&self) -> AppResult<()> {
        for (k, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(AppError::Verification(format!(
                    "{} row {k}: {} values for {} columns",
                    self.figure,
                    row.len(),
                    self.columns.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(AppError::Verification(format!(
                    "{} row {k}: non-finite {}",
                    self.figure, self.columns[j]
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> AppResult<String> {
        let mut out = String::new();
        out.push_str(&format!("# figure: {}\n", self.figure));
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_float(*v)))?;
        }
        let body = w
            .into_inner()
            .map_err(|e| AppError::Io(std::io::Error::other(e.to_string())))?;
        out.push_str(&String::from_utf8(body).expect("csv output is ascii"));
        Ok(out)
    }

    pub fn to_json(&self, scenario: &Scenario) -> AppResult<String> {
        let value = json!({
            "figure": self.figure,
            "scenario": scenario,
            "metadata": self.metadata,
            "columns": self.columns,
            "rows": self.rows,
        });
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    pub fn encode(&self, format: Format, scenario: &Scenario) -> AppResult<String> {
        self.validate()?;
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(scenario),
        }
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the dataset to `out`, plus a sidecar with the scenario and the
/// wall-clock runtime. Without `out` the dataset goes to stdout.
pub fn write_dataset(
    ds: &FigureDataset,
    format: Format,
    scenario: &Scenario,
    out: Option<&Path>,
    runtime_seconds: f64,
) -> AppResult<()> {
    let body = ds.encode(format, scenario)?;
    match out {
        None => {
            print!("{body}");
        }
        Some(path) => {
            fs::write(path, body)?;
            let side = json!({
                "figure": ds.figure,
                "data": path.file_name().map(|f| f.to_string_lossy().into_owned()),
                "format": format,
                "rows": ds.rows.len(),
                "columns": ds.columns,
                "scenario": scenario,
                "metadata": ds.metadata,
                "runtime_seconds": runtime_seconds,
            });
            fs::write(
                sidecar_path(path),
                serde_json::to_string_pretty(&side)? + "\n",
            )?;
        }
    }
    Ok(())
}

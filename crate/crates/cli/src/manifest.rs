//! The JSON run manifest and the CSV tables an experiment produces.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// One acceptance threshold evaluated on a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Measured quantity, rendered for humans.
    pub observed: String,
    pub threshold: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, observed: impl Into<String>, threshold: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            observed: observed.into(),
            threshold: threshold.into(),
            passed,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, format!("{value:.6e}"), format!("<= {limit:e}"), value <= limit)
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, format!("{value:.6}"), format!(">= {limit}"), value >= limit)
    }
}

/// A CSV file body held in memory until the run finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub rows: usize,
    pub body: Vec<u8>,
}

impl Table {
    /// Serializes `records` with a header row, `,` separators and `\n` line
    /// endings.
    pub fn from_records<T: Serialize>(name: &str, records: &[T]) -> Result<Self, csv::Error> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        for r in records {
            writer.serialize(r)?;
        }
        let body = writer.into_inner().map_err(|e| e.into_error())?;
        Ok(Self {
            name: name.to_string(),
            rows: records.len(),
            body,
        })
    }

    pub fn sha256(&self) -> String {
        hex_digest(&self.body)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub category: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: Option<String>,
    /// The effective configuration, after command-line overrides.
    pub config: Option<Value>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    /// `ok` when the experiment ran to completion, `failed` otherwise.
    pub status: String,
    pub error: Option<ErrorRecord>,
    pub results: Value,
    pub checks: Vec<Check>,
    /// Completed and every check passed.
    pub passed: bool,
    pub outputs: Vec<OutputFile>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)
    }

    pub fn read(dir: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: usize,
        x: f64,
        note: Option<f64>,
    }

    #[test]
    fn csv_layout_is_fixed() {
        let t = Table::from_records(
            "t.csv",
            &[Row { n: 1, x: 0.5, note: None }, Row { n: 2, x: -1e-3, note: Some(2.0) }],
        )
        .unwrap();
        assert_eq!(std::str::from_utf8(&t.body).unwrap(), "n,x,note\n1,0.5,\n2,-0.001,2.0\n");
        assert_eq!(t.rows, 2);
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            hex_digest(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn checks_render_thresholds() {
        assert!(Check::at_most("drift", 1e-9, 1e-8).passed);
        assert!(!Check::at_least("rate", 0.1, 0.2).passed);
    }
}

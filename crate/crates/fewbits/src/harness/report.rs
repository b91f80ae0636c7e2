//! Plot-ready CSV rows and the JSON run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};

/// One grid point of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CsvRow {
    pub param_value: f64,
    pub mean_loss: f64,
    pub std_error: f64,
    pub predicted_rate: f64,
    pub regime: String,
}

pub const CSV_HEADER: &str = "param_value,mean_loss,std_error,predicted_rate,regime";

/// Render rows with the fixed five-column header. Floats use Rust's
/// shortest round-trip formatting, so identical results give identical
/// bytes.
pub fn csv_string(rows: &[CsvRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.param_value, row.mean_loss, row.std_error, row.predicted_rate, row.regime
        );
    }
    out
}

/// Everything needed to rerun an experiment, plus a content hash of those
/// inputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ProtocolConfig,
    pub instances: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_stderr: Option<f64>,
    pub content_hash: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: ProtocolConfig,
        instances: Vec<String>,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            command: command.to_string(),
            config,
            instances,
            trials,
            seed,
            sweep: None,
            slope: None,
            slope_stderr: None,
            content_hash: String::new(),
        }
    }

    /// Fill `content_hash` with the SHA-256 of the manifest's canonical
    /// JSON (hash field empty) and return the final JSON.
    pub fn render(mut self) -> Result<String> {
        self.content_hash.clear();
        let unhashed = serde_json::to_string(&self)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
        let mut hasher = Sha256::new();
        hasher.update(unhashed.as_bytes());
        self.content_hash = hex_string(&hasher.finalize());
        serde_json::to_string_pretty(&self)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Write the CSV to `out` and the manifest beside it as
/// `<out>.manifest.json`.
pub fn write_outputs(out: &Path, rows: &[CsvRow], manifest: RunManifest) -> Result<PathBuf> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, csv_string(rows))?;
    let mut manifest_path = out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    let manifest_path = PathBuf::from(manifest_path);
    fs::write(&manifest_path, manifest.render()?)?;
    Ok(manifest_path)
}

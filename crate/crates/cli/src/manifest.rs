//! The run manifest: the machine-readable summary every command writes as
//! its final act.
//!
//! Invariants: every output file the command produced is listed; the file is
//! written atomically (temp file + rename) and strictly last, so a manifest
//! on disk certifies a complete output set; `all_pass` mirrors the process
//! exit code (true exactly when the command exits 0).

use std::collections::BTreeMap;
use std::fs;
#[cfg(test)]
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{OutputRecord, OutputSet};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Version of the output contract: bump when any CSV/JSON schema changes.
pub const SCHEMA_VERSION: &str = "1";

/// One named check with its outcome and (when meaningful) its margin:
/// positive margins certify how far the check cleared its bound.
#[derive(Debug, Clone, Serialize)]
pub struct MonitorRecord {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    pub detail: String,
}

impl MonitorRecord {
    pub fn new(name: &str, pass: bool, margin: Option<f64>, detail: String) -> Self {
        MonitorRecord {
            name: name.to_string(),
            pass,
            margin,
            detail,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub schema_version: String,
    pub command: String,
    /// SHA-256 of the raw configuration file.
    pub config_hash: String,
    pub created_at: String,
    pub completed_at: String,
    /// Column lists of every CSV schema referenced by `outputs`.
    pub schemas: BTreeMap<String, Vec<String>>,
    pub outputs: Vec<OutputRecord>,
    pub monitors: Vec<MonitorRecord>,
    pub all_pass: bool,
    pub notes: Vec<String>,
}

/// Timestamp in RFC 3339 with microseconds, UTC.
pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true)
}

impl Manifest {
    pub fn new(command: &str, config_hash: &str, created_at: String) -> Self {
        Manifest {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            created_at,
            completed_at: String::new(),
            schemas: BTreeMap::new(),
            outputs: Vec::new(),
            monitors: Vec::new(),
            all_pass: false,
            notes: Vec::new(),
        }
    }

    /// Declare one CSV schema (id -> column names). JSON outputs use ids
    /// without a column list.
    pub fn declare_schema(&mut self, id: &str, columns: &[&str]) {
        self.schemas
            .insert(id.to_string(), columns.iter().map(|c| c.to_string()).collect());
    }

    /// Finalize and write the manifest: absorb the output records, stamp the
    /// completion time, set `all_pass` from the monitors, write to a
    /// temporary file in the output directory, and rename it into place.
    pub fn finish(mut self, outputs: &OutputSet) -> Result<bool, CliError> {
        self.outputs = outputs.records().to_vec();
        self.all_pass = self.monitors.iter().all(|m| m.pass);
        self.completed_at = now();
        let text = serde_json::to_string_pretty(&self)
            .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
        let dir = outputs.dir();
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        let fin = dir.join(MANIFEST_FILE);
        fs::write(&tmp, text.as_bytes()).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &fin).map_err(|e| CliError::io(&fin, e))?;
        Ok(self.all_pass)
    }
}

/// Names of the failing monitors, for error reporting.
pub fn failing_names(monitors: &[MonitorRecord]) -> Vec<String> {
    monitors
        .iter()
        .filter(|m| !m.pass)
        .map(|m| m.name.clone())
        .collect()
}

/// Read back a manifest as generic JSON.
#[cfg(test)]
pub fn read_json(dir: &Path) -> Result<serde_json::Value, CliError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

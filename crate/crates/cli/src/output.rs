//! Output files: numeric CSV and JSON, written under a single directory and
//! recorded (name, schema id, SHA-256, row count) for the manifest.
//!
//! Floating-point values are printed with 17 significant digits, enough for
//! every finite `f64` to round-trip exactly through its decimal form.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Render a float with 17 significant digits (scientific notation).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One written file as recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    /// Identifier of the (fixed, versioned) schema the file follows.
    pub schema: String,
    pub sha256: String,
    /// Data rows (CSV: lines below the header; JSON: top-level entries).
    pub rows: usize,
}

/// Collects every file a command writes so the manifest can list them all.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputSet {
    /// Create the output directory (if needed) and an empty record list.
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    fn write_bytes(
        &mut self,
        name: &str,
        schema: &str,
        rows: usize,
        bytes: &[u8],
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.records.push(OutputRecord {
            file: name.to_string(),
            schema: schema.to_string(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
            rows,
        });
        Ok(())
    }

    /// Write a numeric CSV: a header line, then one line per row, every
    /// value at 17 significant digits.
    pub fn write_csv<R>(
        &mut self,
        name: &str,
        schema: &str,
        header: &[&str],
        rows: R,
    ) -> Result<(), CliError>
    where
        R: IntoIterator,
        R::Item: AsRef<[f64]>,
    {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        let mut count = 0usize;
        for row in rows {
            let row = row.as_ref();
            debug_assert_eq!(row.len(), header.len());
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            text.push_str(&line.join(","));
            text.push('\n');
            count += 1;
        }
        self.write_bytes(name, schema, count, text.as_bytes())
    }

    /// Write a pretty-printed JSON document.
    pub fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        schema: &str,
        rows: usize,
        value: &T,
    ) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Run(quasidiag_core::Error::InvalidInput(e.to_string())))?;
        bytes.push(b'\n');
        self.write_bytes(name, schema, rows, &bytes)
    }
}

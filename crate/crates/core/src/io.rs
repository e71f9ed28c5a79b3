//! Line-delimited JSON helpers and the provenance manifest embedded in every
//! file the toolkit writes.
//!
//! JSONL outputs start with a single `{"_manifest": {...}}` line which every
//! reader in this crate skips. CSV outputs carry the same manifest as a
//! leading `# manifest: {...}` comment line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_KEY: &str = "_manifest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub lexicons: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Manifest {
    pub fn new(command: &str, config: &BTreeMap<String, String>) -> Self {
        let canonical = serde_json::to_string(config).expect("string map serializes");
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: sha256_hex(canonical.as_bytes()),
            lexicons: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn with_lexicon(mut self, name: &str, hash: &str) -> Self {
        self.lexicons.insert(name.to_string(), hash.to_string());
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn to_json_line(&self) -> String {
        let mut wrapper = serde_json::Map::new();
        wrapper.insert(
            MANIFEST_KEY.to_string(),
            serde_json::to_value(self).expect("manifest serializes"),
        );
        serde_json::Value::Object(wrapper).to_string()
    }

    pub fn to_csv_comment(&self) -> String {
        format!(
            "# manifest: {}",
            serde_json::to_string(self).expect("manifest serializes")
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A line that failed to parse, kept for the ingestion report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

fn is_manifest_line(line: &str) -> bool {
    line.trim_start().starts_with("{\"_manifest\"")
}

/// Reads every parsable record. Malformed lines are returned, not dropped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, Vec<LineError>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || is_manifest_line(&line) {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(rec) => records.push(rec),
            Err(e) => errors.push(LineError {
                file: path.display().to_string(),
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, errors))
}

/// Like [`read_jsonl`] but any malformed line is an error.
pub fn read_jsonl_strict<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let (records, errors) = read_jsonl(path)?;
    if let Some(first) = errors.first() {
        return Err(Error::InvalidInput(format!(
            "{}:{}: {} ({} malformed lines)",
            first.file,
            first.line,
            first.message,
            errors.len()
        )));
    }
    Ok(records)
}

pub fn write_jsonl<T: Serialize>(
    path: &Path,
    records: &[T],
    manifest: Option<&Manifest>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = |line: &str| -> std::io::Result<()> {
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")
    };
    if let Some(m) = manifest {
        write(&m.to_json_line()).map_err(|e| Error::io(path, e))?;
    }
    for rec in records {
        let line = serde_json::to_string(rec).map_err(|e| Error::json(path.display().to_string(), e))?;
        write(&line).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Renders rows as CSV with a leading manifest comment. Fields containing a
/// comma, quote or newline are quoted.
pub fn render_csv(manifest: Option<&Manifest>, header: &[&str], rows: &[Vec<String>]) -> String {
    render_csv_with_comments(manifest, &[], header, rows)
}

/// [`render_csv`] with extra `# ` comment lines after the manifest.
pub fn render_csv_with_comments(manifest: Option<&Manifest>, comments: &[String], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    if let Some(m) = manifest {
        s.push_str(&m.to_csv_comment());
        s.push('\n');
    }
    for c in comments {
        s.push_str("# ");
        s.push_str(&c.replace('\n', " "));
        s.push('\n');
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| csv_escape(c)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn csv_escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Formats a float for tidy output: fixed 6 decimals, NaN as `NA`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "Inf".into() } else { "-Inf".into() }
    } else {
        format!("{v:.6}")
    }
}

//! JSONL report files.
//!
//! The first line is a header record carrying the wall-clock timestamp, the
//! version string and the configuration echo. Every later line is a payload
//! record whose bytes depend only on the configuration and the seed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::clt::CltReport;
use crate::error::{Error, Result};

pub const VERSION: &str = concat!("gmclt ", env!("CARGO_PKG_VERSION"));

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

pub struct JsonlWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    /// Creates `path` and writes the header.
    pub fn create(path: &Path, config: &Value) -> Result<Self> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = Self { path: path.to_path_buf(), out: BufWriter::new(file) };
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        w.write_value(&json!({
            "record": "header",
            "timestamp": ts,
            "version": VERSION,
            "config": config,
        }))?;
        Ok(w)
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        self.write_value(&serde_json::to_value(record)?)
    }

    fn write_value(&mut self, v: &Value) -> Result<()> {
        let line = serde_json::to_string(v)?;
        writeln!(self.out, "{line}").map_err(|e| io_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| io_err(&self.path, e))
    }
}

/// Payload lines of a report, header skipped.
pub fn read_payload(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line)?;
        if v.get("record").and_then(Value::as_str) != Some("header") {
            out.push(line);
        }
    }
    Ok(out)
}

/// Payload records serialized the same way the writer does, for in-memory
/// comparisons.
pub fn payload_lines(records: &[Value]) -> Result<Vec<String>> {
    records.iter().map(|r| serde_json::to_string(r).map_err(Error::from)).collect()
}

/// CSV of the empirical CDF against `Φ` for each report.
pub fn write_ecdf_csv(path: &Path, reports: &[CltReport]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = String::from("n,x,ecdf,phi\n");
    for r in reports {
        for [x, f, phi] in &r.ecdf {
            body.push_str(&format!("{},{x},{f},{phi}\n", r.n));
        }
    }
    out.write_all(body.as_bytes()).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

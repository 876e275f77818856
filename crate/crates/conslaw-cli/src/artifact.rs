//! Run artifacts: a manifest documenting the exact configuration, CSV tables
//! whose every row carries the manifest hash, and JSON reports.
//!
//! The hash covers the command, library version, seed, and resolved config —
//! not the timestamp — so re-running a config reproduces every CSV byte for
//! byte while the manifest still records when each run happened.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{io_err, CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    hash: &'a str,
    config: &'a serde_json::Value,
    timestamp_unix: u64,
}

/// An output directory with its manifest already written. `hash` is the
/// first column of every CSV row, linking rows back to the manifest.
pub struct RunDir {
    pub dir: PathBuf,
    pub hash: String,
}

impl RunDir {
    /// Creates the directory, derives the run hash from the resolved
    /// configuration, and writes `manifest.json`.
    pub fn create(dir: &Path, command: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        let config = serde_json::to_value(config)
            .map_err(|e| CliError::Config(format!("config echo: {e}")))?;
        let canonical = format!("{command}\n{VERSION}\n{seed}\n{config}");
        let hash = format!("{:016x}", fnv1a64(canonical.as_bytes()));
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let timestamp_unix =
            SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest =
            Manifest { command, version: VERSION, seed, hash: &hash, config: &config, timestamp_unix };
        let path = dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Config(format!("manifest encode: {e}")))?;
        fs::write(&path, body + "\n").map_err(|e| io_err(&path, e))?;
        Ok(RunDir { dir: dir.to_path_buf(), hash })
    }

    /// Writes a CSV table, prepending the manifest-hash column to the header
    /// and every row.
    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let fail = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(fail)?;
        let mut head: Vec<&str> = vec!["manifest"];
        head.extend_from_slice(header);
        w.write_record(&head).map_err(fail)?;
        for row in rows {
            let mut rec: Vec<&str> = Vec::with_capacity(row.len() + 1);
            rec.push(&self.hash);
            rec.extend(row.iter().map(String::as_str));
            w.write_record(&rec).map_err(fail)?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    /// Writes a pretty-printed JSON report.
    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let body = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        fs::write(&path, body + "\n").map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

/// Shortest round-trip decimal rendering of a float cell.
pub fn cell(v: f64) -> String {
    format!("{v}")
}

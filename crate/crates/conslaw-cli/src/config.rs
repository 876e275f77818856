//! Config documents and their resolution order: command-line flags override
//! config-file fields, the `CONSLAW_SEED` environment variable fills in a
//! missing seed, and built-in defaults cover the rest.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use conslaw_core::flows::WDSchedule;

use crate::error::{io_err, CliError, Result};

/// Parses a JSON config document, or returns defaults when no file is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            serde_json::from_str(&s).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Seed precedence: `--seed` flag, then the config field, then
/// `CONSLAW_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, field: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(field) {
        return Ok(s);
    }
    match std::env::var("CONSLAW_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("CONSLAW_SEED must be an unsigned integer, got '{v}'"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(CliError::Config(format!("CONSLAW_SEED: {e}"))),
    }
}

/// Output-directory precedence: `--out` flag, then the config field, then
/// `./out`. The directory is not part of the manifest hash — pointing the
/// same experiment somewhere else must reproduce identical rows.
pub fn resolve_out(flag: Option<&Path>, field: Option<&Path>) -> PathBuf {
    flag.or(field).map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out"))
}

/// Weight-decay schedule: a bare number is a constant λ, an object with
/// `pieces: [[start_time, lambda], …]` is piecewise-constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WdCfg {
    Constant(f64),
    Piecewise { pieces: Vec<(f64, f64)> },
}

impl Default for WdCfg {
    fn default() -> Self {
        WdCfg::Constant(0.0)
    }
}

impl WdCfg {
    pub fn schedule(&self) -> Result<WDSchedule> {
        Ok(match self {
            WdCfg::Constant(c) => WDSchedule::constant(*c)?,
            WdCfg::Piecewise { pieces } => WDSchedule::piecewise(pieces.clone())?,
        })
    }
}

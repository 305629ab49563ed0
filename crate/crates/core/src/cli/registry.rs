use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;

/// Environment variable naming the default registry file.
pub const REGISTRY_ENV: &str = "MONOPAT_REGISTRY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub digest: String,
    pub command: String,
    pub summary: String,
    pub seconds: f64,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryContents {
    pub records: Vec<RunRecord>,
    /// 1-based line numbers that failed to parse, with the parser message.
    pub bad_lines: Vec<(usize, String)>,
}

/// `--registry` if given, else the environment variable.
pub fn registry_path(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(REGISTRY_ENV).map(PathBuf::from))
}

/// Appends one JSON line with a single write on a file opened in append
/// mode, creating the file if needed.
pub fn append_run(record: &RunRecord, path: &Path) -> Result<(), CliError> {
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    let io = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    f.write_all(line.as_bytes()).map_err(io)
}

pub fn read_registry(path: &Path) -> Result<RegistryContents, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut records = Vec::new();
    let mut bad_lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => records.push(r),
            Err(e) => bad_lines.push((i + 1, e.to_string())),
        }
    }
    Ok(RegistryContents { records, bad_lines })
}

pub fn now_seconds() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

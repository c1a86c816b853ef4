//! Artifact files and the run record.
//!
//! Artifact bodies depend only on config and seed; wall time and timestamps go to `run.json`.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const RECORD_NAME: &str = "run.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config: String,
    pub config_sha256: String,
    pub code_version: String,
    pub ledger_version: u32,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub exit_code: u8,
    pub message: Option<String>,
    pub outputs: Vec<ManifestEntry>,
}

/// Output directory plus the manifest of what was written into it.
pub struct Outputs {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
    started: Instant,
    started_unix: u64,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        })
    }

    /// Writes `name` under the output directory.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        self.put(&path, name.to_string(), bytes)?;
        Ok(path)
    }

    /// Writes to `path` as given (e.g. a ledger outside the output directory).
    pub fn write_at(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        self.put(path, path.display().to_string(), bytes)
    }

    fn put(&mut self, path: &Path, label: String, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.entries.retain(|e| e.path != label);
        self.entries.push(ManifestEntry { path: label, bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, mut record: RunRecord) -> Result<(), CliError> {
        record.started_unix = self.started_unix;
        record.wall_time_s = self.started.elapsed().as_secs_f64();
        record.outputs = self.entries;
        let text = serde_json::to_string_pretty(&record)? + "\n";
        let path = self.dir.join(RECORD_NAME);
        std::fs::write(&path, text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(())
    }
}

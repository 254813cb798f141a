use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    /// Every stage is single-threaded with seeded streams, so runs always repeat bitwise.
    pub deterministic: bool,
    pub config: Value,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub artifacts: BTreeMap<String, Artifact>,
    pub metrics: BTreeMap<String, Value>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::Run(format!("cannot read {}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    pending: Vec<(String, PathBuf)>,
}

impl ManifestBuilder {
    pub fn start(command: &str, seed: Option<u64>, config: Value) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                deterministic: true,
                config,
                started_unix_ms: now_ms(),
                finished_unix_ms: 0,
                artifacts: BTreeMap::new(),
                metrics: BTreeMap::new(),
            },
            pending: Vec::new(),
        }
    }

    pub fn artifact(&mut self, name: &str, path: &Path) {
        self.pending.push((name.to_string(), path.to_path_buf()));
    }

    pub fn metric(&mut self, name: &str, value: impl Into<Value>) {
        self.manifest.metrics.insert(name.to_string(), value.into());
    }

    /// Hash the artifacts and write the manifest to `path`.
    pub fn finish(mut self, path: &Path) -> CliResult<RunManifest> {
        for (name, p) in std::mem::take(&mut self.pending) {
            let sha256 = sha256_file(&p)?;
            self.manifest.artifacts.insert(
                name,
                Artifact {
                    path: p.display().to_string(),
                    sha256,
                },
            );
        }
        self.manifest.finished_unix_ms = now_ms();
        write_json(path, &self.manifest)?;
        Ok(self.manifest)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::Run(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
}

//! Per-run manifest written next to every command's outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    /// File names inside the output directory.
    pub outputs: Vec<String>,
    /// sha256 over every hyperparameter that shaped the outputs.
    pub config_hash: Option<String>,
    pub version: String,
    /// RFC 3339, UTC.
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            config: None,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config_hash: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: now(),
            finished: String::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    /// Stamps the finish time and writes `manifest.json` into `dir`.
    pub fn finish(&mut self, dir: &Path) -> Result<()> {
        self.finished = now();
        crate::models::config::write_json(&dir.join(MANIFEST_FILE), self)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        crate::models::config::read_json(&dir.join(MANIFEST_FILE))
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

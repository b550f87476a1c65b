use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{io_context, CliResult};

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_secs: f64,
    pub diagnostics: BTreeMap<String, f64>,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed,
            threads: rayon::current_num_threads(),
            wall_time_secs: 0.0,
            diagnostics: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(io_context(format!("reading back {}", path.display())))?;
        self.outputs.push(OutputRecord {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Writes `<dir>/<command>_manifest.json`.
    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(format!("{}_manifest.json", self.command.replace('-', "_")));
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json).map_err(io_context(format!("writing {}", path.display())))?;
        Ok(path)
    }
}

//! Run manifests: the resolved configuration, seeds and versions behind a
//! run, written next to its outputs. Feeding a manifest back through
//! `--config` reproduces the run bit-identically.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: ExperimentConfig,
    /// Files the run produced, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        let path = dir.join("manifest.json");
        std::fs::write(&path, text)
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

/// Writes one named output file and records it in the manifest.
pub fn emit(dir: &Path, manifest: &mut RunManifest, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content)
        .with_context(|| format!("cannot write {}", path.display()))?;
    manifest.record(name);
    Ok(())
}

use std::fs;
use std::path::Path;

use cmrac_core::config::ConfigFile;
use cmrac_core::feasibility::FeasibilityReport;
use cmrac_core::sim::SimConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Failure, EXIT_IO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub command: String,
    pub toolkit_version: String,
    /// File path, or `preset:<name>`.
    pub config_source: String,
    /// SHA-256 of the config text as read.
    pub config_sha256: String,
    pub output_dir: String,
}

/// Written before a simulation starts. `config` is the fully resolved
/// scenario and re-parses to the same [`SimConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run: RunInfo,
    pub feasibility: FeasibilityReport,
    pub config: ConfigFile,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunManifest {
    pub fn new(
        command: &str,
        source: &str,
        text: &str,
        out: &Path,
        cfg: &SimConfig,
        report: &FeasibilityReport,
    ) -> Self {
        Self {
            run: RunInfo {
                command: command.into(),
                toolkit_version: env!("CARGO_PKG_VERSION").into(),
                config_source: source.into(),
                config_sha256: sha256_hex(text),
                output_dir: out.display().to_string(),
            },
            feasibility: report.clone(),
            config: ConfigFile::from_sim_config(cfg),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        let text =
            toml::to_string(self).map_err(|e| Failure::new(EXIT_IO, format!("manifest: {e}")))?;
        fs::write(dir.join("manifest.toml"), text).map_err(|e| {
            Failure::new(
                EXIT_IO,
                format!("{}: {e}", dir.join("manifest.toml").display()),
            )
        })
    }
}

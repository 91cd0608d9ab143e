//! Configuration, persistence, plot data and run manifests.

pub mod config;
pub mod plot;
pub mod trace;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub use config::{CampaignConfig, CurveShape, Mode};
pub use plot::{emit_plot_data, Curve, PlotData};
pub use trace::{read_trace, write_trace};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run: the canonical config text, its
/// hash, the seed and the tool version, plus hashes of every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub tool_version: String,
    pub mode: Mode,
    pub seed: u64,
    pub config_sha256: String,
    pub config_toml: String,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn build(config: &CampaignConfig, dir: &Path, files: &[PathBuf]) -> Result<Self> {
        let config_toml = config.to_toml()?;
        let mut outputs = Vec::with_capacity(files.len());
        for f in files {
            let rel = f.strip_prefix(dir).unwrap_or(f);
            outputs.push(OutputFile {
                path: rel.to_string_lossy().replace('\\', "/"),
                sha256: sha256_hex(&std::fs::read(f)?),
            });
        }
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(Self {
            schema: MANIFEST_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            mode: config.mode,
            seed: config.seed,
            config_sha256: sha256_hex(config_toml.as_bytes()),
            config_toml,
            outputs,
        })
    }
}

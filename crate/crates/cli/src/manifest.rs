use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Everything needed to reproduce a run: the effective config (flags already folded in) and
/// the command with all its arguments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: Command,
    pub config: String,
    pub seed: u64,
    pub workers: Option<usize>,
    pub started_unix: u64,
    pub wall_clock_secs: f64,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes each artifact under `dir` and returns their digests.
pub fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> anyhow::Result<Vec<OutputFile>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    files
        .iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            Ok(OutputFile { path: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() })
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> anyhow::Result<()> {
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_manifest(path: &Path) -> anyhow::Result<RunManifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

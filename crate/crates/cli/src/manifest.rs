use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Command;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

impl OutputFile {
    pub fn of(file: &str, contents: &[u8]) -> Self {
        Self {
            file: file.into(),
            sha256: hex::encode(Sha256::digest(contents)),
            bytes: contents.len() as u64,
        }
    }
}

/// Everything needed to repeat a run: the fully resolved config plus the
/// checksums its outputs must reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    /// Resolved config as TOML, defaults filled in.
    pub config: String,
    pub seed: u64,
    /// Worker threads used; outputs do not depend on it.
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub discarded: u64,
    pub status: String,
    pub summary: Value,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Files whose checksum differs from `other`, or that either side lacks.
    pub fn mismatches(&self, other: &RunManifest) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.outputs {
            match other.outputs.iter().find(|b| b.file == a.file) {
                Some(b) if b.sha256 == a.sha256 => {}
                _ => out.push(a.file.clone()),
            }
        }
        for b in &other.outputs {
            if !self.outputs.iter().any(|a| a.file == b.file) {
                out.push(b.file.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        let f = OutputFile::of("x", b"");
        assert_eq!(f.sha256, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(f.bytes, 0);
    }
}

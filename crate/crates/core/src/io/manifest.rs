//! Run manifests: enough metadata to replay any output bit-identically.
//!
//! Manifests embedded inside result records carry no timestamp so that
//! identical runs produce identical bytes; standalone manifest files may
//! carry one.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::atomic_write;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    /// Toolkit version that produced the output.
    pub version: String,
    /// The invoked command line, normalized.
    pub command: String,
    pub master_seed: u64,
    pub config_hash: String,
    /// SHA-256 digests of consumed input files, keyed by path.
    pub inputs: BTreeMap<String, String>,
    /// Unix seconds; None inside embedded (deterministic) manifests.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub created_unix: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, config_hash: &str) -> Self {
        RunManifest {
            schema: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            master_seed,
            config_hash: config_hash.to_string(),
            inputs: BTreeMap::new(),
            created_unix: None,
        }
    }

    pub fn with_input(mut self, path: &Path) -> Result<Self> {
        let digest = super::sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(self)
    }

    /// Attaches the current wall-clock time for standalone files.
    pub fn stamped(mut self) -> Self {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.created_unix = Some(now);
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        atomic_write(path, json.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let m: RunManifest = serde_json::from_slice(&bytes)?;
        if m.schema != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest schema {}",
                m.schema
            )));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_manifest_is_deterministic() {
        let a = RunManifest::new("measure x.fmat", 7, "abc");
        let b = RunManifest::new("measure x.fmat", 7, "abc");
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(!serde_json::to_string(&a).unwrap().contains("created_unix"));
    }

    #[test]
    fn stamped_manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        std::fs::write(&input, b"payload").unwrap();
        let p = dir.path().join("manifest.json");
        let m = RunManifest::new("extract", 1, "ff")
            .with_input(&input)
            .unwrap()
            .stamped();
        m.write(&p).unwrap();
        let back = RunManifest::read(&p).unwrap();
        assert_eq!(m, back);
        assert!(back.created_unix.is_some());
        assert_eq!(back.inputs.len(), 1);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let mut m = RunManifest::new("x", 0, "h");
        m.schema = 99;
        m.write(&p).unwrap();
        assert!(RunManifest::read(&p).is_err());
    }
}

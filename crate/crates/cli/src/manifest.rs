//! Run manifests written next to every command's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<usize>,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub seeds: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub counts: BTreeMap<String, usize>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn seed(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        self.seeds
            .insert(name.into(), serde_json::to_value(value).expect("seed serializes"));
        self
    }

    pub fn count(&mut self, name: &str, n: usize) -> &mut Self {
        self.counts.insert(name.into(), n);
        self
    }

    fn entry(path: &Path, shown: String, records: Option<usize>) -> Result<FileEntry, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(FileEntry {
            path: shown,
            records,
            sha256: sha256_hex(&bytes),
        })
    }

    pub fn input(&mut self, path: &Path, records: Option<usize>) -> Result<&mut Self, CliError> {
        self.inputs.push(Self::entry(path, path.display().to_string(), records)?);
        Ok(self)
    }

    /// Records an output. Fails if the file was not produced.
    pub fn output(&mut self, path: &Path, records: Option<usize>) -> Result<&mut Self, CliError> {
        self.outputs.push(Self::entry(path, path.display().to_string(), records)?);
        Ok(self)
    }

    /// Like [`output`](Self::output) but records the path relative to `base`.
    pub fn output_in(&mut self, base: &Path, path: &Path, records: Option<usize>) -> Result<&mut Self, CliError> {
        let shown = path.strip_prefix(base).unwrap_or(path).display().to_string();
        self.outputs.push(Self::entry(path, shown, records)?);
        Ok(self)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_file(path, text.as_bytes())
    }
}

/// `<out>.run.json`, the manifest location for single-output commands.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_path() {
        assert_eq!(manifest_path_for(Path::new("out/d.jsonl")), PathBuf::from("out/d.jsonl.run.json"));
    }
}

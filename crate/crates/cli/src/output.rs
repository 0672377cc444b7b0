use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// One file written during a run, relative to the run directory.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Collects every emitted file so the manifest can list them with hashes.
/// Shared between scenario threads; each scenario writes into its own
/// subdirectory, so only the entry list needs the lock.
pub struct RunDir {
    root: PathBuf,
    entries: Mutex<Vec<ManifestEntry>>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Mutex::new(Vec::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, rel: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        let digest = Sha256::digest(contents);
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.entries.lock().expect("manifest lock").push(ManifestEntry {
            path: rel.to_string(),
            bytes: contents.len(),
            sha256,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes `manifest.json` with the sorted file list. The timestamp is the
    /// only field that differs between two runs of the same config.
    pub fn finish(self, config_name: &str, config_text: &str) -> Result<Vec<ManifestEntry>, CliError> {
        let mut entries = self.entries.into_inner().expect("manifest lock");
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        let stamp = time::OffsetDateTime::now_utc()
            .format(&time::format_description::well_known::Rfc3339)
            .unwrap_or_default();
        let config_hash: String = Sha256::digest(config_text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        let manifest = serde_json::json!({
            "generated_at": stamp,
            "tool": concat!("hmhf-lab ", env!("CARGO_PKG_VERSION")),
            "config": { "file": config_name, "sha256": config_hash },
            "files": entries,
        });
        let path = self.root.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(entries)
    }
}

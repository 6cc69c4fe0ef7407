use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Provenance record written next to every artifact a command produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub tool_version: String,
    pub config_hash: Option<String>,
    pub vocab_hash: Option<String>,
    /// Input path → sha256 of its bytes.
    pub data_hashes: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Artifact paths relative to the manifest's directory.
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub notes: BTreeMap<String, serde_json::Value>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn start() -> Self {
        RunManifest {
            command: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: None,
            vocab_hash: None,
            data_hashes: BTreeMap::new(),
            seed: None,
            started_unix: now(),
            finished_unix: 0,
            artifacts: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let h = sha256_file(path)?;
        self.data_hashes.insert(path.display().to_string(), h);
        Ok(())
    }

    pub fn artifact(&mut self, rel: impl Into<String>) {
        self.artifacts.push(rel.into());
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.notes.insert(key.to_string(), v);
        }
    }

    pub fn write(mut self, path: &Path) -> Result<()> {
        self.finished_unix = now();
        let text = serde_json::to_string_pretty(&self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// Manifest path for a single-file output: `<out>.manifest.json`.
pub fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Creates the next unused `run-NNN` directory under `root`. Existing runs
/// are never touched.
pub fn new_run_dir(root: &Path) -> Result<PathBuf> {
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    let mut next = 0;
    for entry in fs::read_dir(root)? {
        let name = entry?.file_name();
        if let Some(n) = name.to_str().and_then(|s| s.strip_prefix("run-")).and_then(|s| s.parse::<usize>().ok()) {
            next = next.max(n + 1);
        }
    }
    for n in next..next + 1000 {
        let dir = root.join(format!("run-{n:03}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    bail!("no free run directory under {}", root.display())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_dirs_are_append_only() {
        let tmp = tempfile::tempdir().unwrap();
        let a = new_run_dir(tmp.path()).unwrap();
        let b = new_run_dir(tmp.path()).unwrap();
        assert!(a.ends_with("run-000"));
        assert!(b.ends_with("run-001"));
        fs::remove_dir(&a).unwrap();
        assert!(new_run_dir(tmp.path()).unwrap().ends_with("run-002"));
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar(Path::new("out/v.tsv")), PathBuf::from("out/v.tsv.manifest.json"));
    }
}

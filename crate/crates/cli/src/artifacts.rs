//! Artifact collection, hashing and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// `sha256("blob <len>\0" + bytes)`, the git object layout with SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Collects artifacts in memory; nothing touches the disk until `commit` or `flush_partial`.
#[derive(Debug)]
pub struct ArtifactSink {
    dir: PathBuf,
    pending: Vec<(String, Vec<u8>)>,
}

impl ArtifactSink {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), pending: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.pending.push((name.into(), bytes.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    fn write_all(&self, suffix: &str) -> io::Result<Vec<ArtifactEntry>> {
        fs::create_dir_all(&self.dir)?;
        let mut entries = Vec::with_capacity(self.pending.len());
        for (name, bytes) in &self.pending {
            let name = format!("{name}{suffix}");
            fs::write(self.dir.join(&name), bytes)?;
            entries.push(ArtifactEntry { name, sha256: content_hash(bytes), bytes: bytes.len() });
        }
        Ok(entries)
    }

    pub fn commit(&self) -> io::Result<Vec<ArtifactEntry>> {
        self.write_all("")
    }

    /// Writes what has been collected so far under `<name>.partial`.
    pub fn flush_partial(&self) -> io::Result<Vec<ArtifactEntry>> {
        self.write_all(".partial")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Violation,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Violation => 1,
            Self::Error => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub status: Status,
    pub violations: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub workers: usize,
    pub stages: Vec<Stage>,
    pub artifacts: Vec<ArtifactEntry>,
    pub summary: Summary,
}

impl RunManifest {
    /// Re-hashes every listed artifact in `dir` and returns the names that differ.
    pub fn verify_hashes(&self, dir: &Path) -> io::Result<Vec<String>> {
        let mut bad = Vec::new();
        for a in &self.artifacts {
            let bytes = fs::read(dir.join(&a.name))?;
            if content_hash(&bytes) != a.sha256 {
                bad.push(a.name.clone());
            }
        }
        Ok(bad)
    }
}

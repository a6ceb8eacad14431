//! Training-run manifest: the effective configuration plus per-iteration,
//! per-size counts, acceptance ratios and file hashes. Paths are relative
//! to the output directory and nothing time-dependent is recorded, so two
//! runs with the same inputs and seed produce identical manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use itnn_core::Corpus;

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const FORMAT: &str = "itnn-train-manifest";
pub const VERSION: u32 = 1;

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Hash over image ids and samples, in corpus order.
pub fn corpus_digest(corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    for e in corpus.entries() {
        h.update((e.id.len() as u64).to_le_bytes());
        h.update(e.id.as_bytes());
        h.update((e.plane.width() as u64).to_le_bytes());
        h.update((e.plane.height() as u64).to_le_bytes());
        h.update(e.plane.samples());
    }
    hex(&h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

impl FileEntry {
    pub fn new(root: &Path, path: &Path) -> Result<Self> {
        let rel = path.strip_prefix(root).unwrap_or(path);
        Ok(FileEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: sha256_file(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub images: usize,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeEntry {
    pub size: String,
    pub pairs: usize,
    pub examined: usize,
    pub accepted: usize,
    /// accepted / examined; absent when nothing was examined.
    pub acceptance_ratio: Option<f64>,
    pub trained: bool,
    pub init_digest: String,
    pub final_digest: String,
    pub first_loss: Option<f64>,
    pub last_loss: Option<f64>,
    pub shard: FileEntry,
    pub provenance: FileEntry,
    pub losses: FileEntry,
    pub model: FileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationEntry {
    pub index: usize,
    /// `get_partition` or `get_partition_nn`.
    pub stage: String,
    pub cleansing: bool,
    pub records: FileEntry,
    pub sizes: Vec<SizeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub config: RunConfig,
    pub corpus: CorpusInfo,
    pub iterations: Vec<IterationEntry>,
    pub models: Vec<FileEntry>,
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })
    }
}

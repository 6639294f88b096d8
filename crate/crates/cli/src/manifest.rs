//! Dataset manifests (input audio) and the spectrogram index written by
//! `make-spectrograms`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct RawEntry {
    path: String,
    #[serde(default)]
    label: String,
    duration: f64,
    #[serde(default)]
    split: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// As written in the manifest.
    pub rel: String,
    /// Resolved against the manifest's directory.
    pub path: PathBuf,
    pub label: String,
    /// Declared duration in seconds.
    pub duration: f64,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Reads a CSV with header `path,label,duration[,split]`; relative paths
    /// resolve against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("in manifest {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, row) in rdr.deserialize::<RawEntry>().enumerate() {
            let row = row.with_context(|| format!("row {}", i + 1))?;
            if row.path.is_empty() {
                bail!("row {}: empty path", i + 1);
            }
            if !(row.duration > 0.0 && row.duration.is_finite()) {
                bail!("row {}: duration must be > 0, got {}", i + 1, row.duration);
            }
            if !seen.insert(row.path.clone()) {
                bail!("row {}: duplicate path `{}`", i + 1, row.path);
            }
            entries.push(ManifestEntry {
                path: base.join(&row.path),
                rel: row.path,
                label: row.label,
                duration: row.duration,
                split: row.split,
            });
        }
        Ok(Self { entries })
    }
}

/// One produced spectrogram file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramRecord {
    /// File name inside the spectrogram directory.
    pub file: String,
    pub source: String,
    /// `orig` or the pitch-shift factor.
    pub augment: String,
    pub kind: String,
    pub label: String,
    pub split: String,
    /// Digest of the source audio and the pipeline settings.
    pub input_hash: String,
    pub config_hash: String,
    pub seed: u64,
}

pub fn read_index(path: &Path) -> Result<Vec<SpectrogramRecord>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    rdr.deserialize()
        .collect::<Result<Vec<SpectrogramRecord>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn index_bytes(records: &[SpectrogramRecord]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["file", "source", "augment", "kind", "label", "split", "input_hash", "config_hash", "seed"])?;
    for r in records {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

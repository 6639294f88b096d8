use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use dfn_core::signal::{cwt_morlet, load_wav, magnitude_view, pitch_shift, resample, resize_bilinear};
use dfn_core::tensorfile::{write_atomic, write_tensor, TensorFile};

use crate::config::{hex, ExperimentConfig};
use crate::manifest::{index_bytes, read_index, DatasetManifest, ManifestEntry, SpectrogramRecord};
use crate::Outcome;

pub const SPECTROGRAM_DIR: &str = "spectrograms";
pub const INDEX_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineSummary {
    pub clips: usize,
    pub written: usize,
    pub reused: usize,
    pub failed: usize,
}

pub fn spectrogram_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir().join(SPECTROGRAM_DIR)
}

pub fn index_path(cfg: &ExperimentConfig) -> PathBuf {
    spectrogram_dir(cfg).join(INDEX_FILE)
}

fn sanitize(rel: &str) -> String {
    rel.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn augment_tag(scale: Option<f64>) -> String {
    match scale {
        None => "orig".into(),
        Some(s) => format!("p{s}"),
    }
}

fn input_hash(bytes: &[u8], pipeline: &str) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.update(pipeline.as_bytes());
    h.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect()
}

enum ClipResult {
    Reused(Vec<SpectrogramRecord>),
    Written(Vec<SpectrogramRecord>),
}

fn process_clip(
    cfg: &ExperimentConfig,
    entry: &ManifestEntry,
    dir: &Path,
    previous: &[&SpectrogramRecord],
) -> Result<ClipResult> {
    let bytes = std::fs::read(&entry.path).with_context(|| format!("reading {}", entry.path.display()))?;
    let pipeline_hash = hex(cfg.pipeline_hash());
    let ih = input_hash(&bytes, &pipeline_hash);
    if !previous.is_empty()
        && previous
            .iter()
            .all(|r| r.input_hash == ih && r.label == entry.label && r.split == entry.split && dir.join(&r.file).is_file())
    {
        return Ok(ClipResult::Reused(previous.iter().map(|&r| r.clone()).collect()));
    }

    let signal = load_wav(&entry.path)?;
    let mut versions = vec![(None, signal.clone())];
    if signal.duration() < cfg.f64("short_clip_s") {
        for s in cfg.f64_list("pitch_scales") {
            versions.push((Some(s), pitch_shift(&signal, s)));
        }
    }

    let params = cfg.cwt_params();
    let rate = cfg.f64("sample_rate");
    let n = cfg.usize("n");
    let stem = sanitize(&entry.rel);
    let mut records = Vec::new();
    for (scale, sig) in versions {
        let tag = augment_tag(scale);
        let sig = resample(&sig, rate);
        let coeffs = cwt_morlet(&sig, &params).with_context(|| format!("{} ({tag})", entry.rel))?;
        for kind in cfg.scale_kinds() {
            let source = format!("{}#{tag}", entry.rel);
            let sp = resize_bilinear(&magnitude_view(&coeffs, kind, &source), n);
            let file = format!("{stem}__{tag}__{kind}.dfnt");
            write_tensor(dir.join(&file), &TensorFile::from_spectrogram(&sp, cfg.seed(), cfg.pipeline_hash()))?;
            records.push(SpectrogramRecord {
                file,
                source: entry.rel.clone(),
                augment: tag.clone(),
                kind: kind.name().into(),
                label: entry.label.clone(),
                split: entry.split.clone(),
                input_hash: ih.clone(),
                config_hash: pipeline_hash.clone(),
                seed: cfg.seed(),
            });
        }
    }
    Ok(ClipResult::Written(records))
}

/// Converts every manifest clip into one `n × n` tensor file per augmented
/// version and scale kind, and writes the spectrogram index. Clips whose
/// audio and settings are unchanged since the last run are not rewritten.
pub fn cmd_make_spectrograms(cfg: &ExperimentConfig) -> Result<(Outcome, PipelineSummary)> {
    let manifest = DatasetManifest::load(&cfg.manifest()?)?;
    let dir = spectrogram_dir(cfg);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let index = index_path(cfg);
    let old = if index.is_file() { read_index(&index).unwrap_or_default() } else { Vec::new() };
    let mut by_source: BTreeMap<&str, Vec<&SpectrogramRecord>> = BTreeMap::new();
    for r in &old {
        by_source.entry(r.source.as_str()).or_default().push(r);
    }

    let results: Vec<Result<ClipResult>> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let prev = by_source.get(e.rel.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            process_clip(cfg, e, &dir, prev)
        })
        .collect();

    let mut summary = PipelineSummary {
        clips: manifest.entries.len(),
        ..Default::default()
    };
    let mut records = Vec::new();
    for (entry, res) in manifest.entries.iter().zip(results) {
        match res {
            Ok(ClipResult::Reused(r)) => {
                summary.reused += r.len();
                records.extend(r);
            }
            Ok(ClipResult::Written(r)) => {
                summary.written += r.len();
                records.extend(r);
            }
            Err(e) => {
                eprintln!("error: {}: {e:#}", entry.rel);
                summary.failed += 1;
            }
        }
    }

    let bytes = index_bytes(&records)?;
    if std::fs::read(&index).ok().as_deref() != Some(bytes.as_slice()) {
        write_atomic(&index, &bytes).with_context(|| format!("writing {}", index.display()))?;
    }
    Ok((Outcome::from_counts(summary.clips, summary.failed), summary))
}

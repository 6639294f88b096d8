//! Loading spectrogram tensors for one scale kind and mapping them to the
//! generator's `[-1, 1]` range.

use anyhow::{anyhow, bail, Context, Result};

use dfn_core::gan::Tensor4;
use dfn_core::linalg::Matrix;
use dfn_core::signal::{ScaleKind, Spectrogram};
use dfn_core::tensorfile::read_tensor;

use crate::config::{hex, ExperimentConfig};
use crate::manifest::read_index;
use crate::spectrograms::{index_path, spectrogram_dir};

/// Affine map from data values onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub lo: f64,
    pub hi: f64,
}

impl Normalizer {
    pub fn fit<'a>(ms: impl IntoIterator<Item = &'a Matrix>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for m in ms {
            for &v in m.as_slice() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Self { lo, hi }
    }

    pub fn forward(&self, m: &Matrix) -> Matrix {
        m.map(|v| 2.0 * (v - self.lo) / (self.hi - self.lo) - 1.0)
    }

    pub fn inverse(&self, m: &Matrix) -> Matrix {
        m.map(|v| self.lo + (v + 1.0) * 0.5 * (self.hi - self.lo))
    }
}

/// Spectrograms of one kind: the training pool and the real reference set
/// used by the metrics.
#[derive(Debug, Clone)]
pub struct KindData {
    pub kind: ScaleKind,
    pub train: Vec<Spectrogram>,
    pub real: Vec<Spectrogram>,
    pub norm: Normalizer,
}

impl KindData {
    /// Builds the sets directly; `real` falls back to `train` when empty.
    pub fn new(kind: ScaleKind, train: Vec<Spectrogram>, real: Vec<Spectrogram>) -> Result<Self> {
        if train.is_empty() {
            bail!("no real {kind} spectrograms to train on");
        }
        let side = train[0].side().ok_or_else(|| anyhow!("spectrograms must be square"))?;
        if train.iter().chain(&real).any(|s| s.side() != Some(side)) {
            bail!("spectrograms differ in size");
        }
        let norm = Normalizer::fit(train.iter().map(|s| &s.data));
        let real = if real.is_empty() { train.clone() } else { real };
        Ok(Self { kind, train, real, norm })
    }

    pub fn side(&self) -> usize {
        self.train[0].data.rows()
    }

    pub fn train_normalized(&self) -> Vec<Matrix> {
        self.train.iter().map(|s| self.norm.forward(&s.data)).collect()
    }

    pub fn real_normalized(&self) -> Result<Tensor4> {
        let ms: Vec<Matrix> = self.real.iter().map(|s| self.norm.forward(&s.data)).collect();
        Ok(Tensor4::from_matrices(&ms)?)
    }
}

/// Reads the spectrogram index and every file of `kind`. Rows with split
/// `test` form the real reference set when present.
pub fn load_kind(cfg: &ExperimentConfig, kind: ScaleKind) -> Result<KindData> {
    let index = index_path(cfg);
    if !index.is_file() {
        bail!("missing real data: {} not found (run make-spectrograms first)", index.display());
    }
    let dir = spectrogram_dir(cfg);
    let expected = hex(cfg.pipeline_hash());
    let (mut train, mut real) = (Vec::new(), Vec::new());
    for r in read_index(&index)?.into_iter().filter(|r| r.kind == kind.name()) {
        if r.config_hash != expected {
            bail!(
                "{} was produced with different pipeline settings (hash {}, expected {expected})",
                r.file,
                r.config_hash
            );
        }
        let sp = read_tensor(dir.join(&r.file))
            .and_then(|t| t.to_spectrogram())
            .with_context(|| format!("reading {}", r.file))?;
        if sp.side() != Some(cfg.usize("n")) {
            bail!("{} is not {n}×{n}", r.file, n = cfg.usize("n"));
        }
        if r.split == "test" {
            real.push(sp);
        } else {
            train.push(sp);
        }
    }
    if train.is_empty() {
        bail!("missing real data: no {kind} training spectrograms in {}", index.display());
    }
    KindData::new(kind, train, real)
}

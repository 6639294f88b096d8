//! Flat `key = value` experiment configuration.
//!
//! Every value is parsed at load time and stored in canonical form, so two
//! spellings of the same number hash identically.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use dfn_core::eval::GmmSpec;
use dfn_core::gan::{Adam, GanConfig, PenaltyMode};
use dfn_core::signal::{CwtParams, ScaleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    /// Paths; never hashed.
    Io,
    Pipeline,
    Train,
    Eval,
    Gmm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Float,
    Int,
    Bool,
    Text,
    FloatList,
    Kinds,
    Variants,
    FloatOrAuto,
    Penalty,
}

struct KeySpec {
    name: &'static str,
    default: &'static str,
    ty: Ty,
    section: Section,
    doc: &'static str,
}

const fn key(name: &'static str, default: &'static str, ty: Ty, section: Section, doc: &'static str) -> KeySpec {
    KeySpec {
        name,
        default,
        ty,
        section,
        doc,
    }
}

use Section::*;
use Ty::*;

const KEYS: &[KeySpec] = &[
    key("manifest", "", Text, Io, "dataset manifest CSV (path,label,duration[,split])"),
    key("out", "out", Text, Io, "output directory"),
    key("seed", "0", Int, Pipeline, "master seed"),
    key("sample_rate", "16000", Float, Pipeline, "working sample rate in Hz"),
    key("frame_ms", "50", Float, Pipeline, "CWT frame length in ms"),
    key("overlap", "0.5", Float, Pipeline, "frame overlap fraction"),
    key("n_scales", "32", Int, Pipeline, "wavelet scales per frame"),
    key("omega0", "6", Float, Pipeline, "Morlet centre frequency"),
    key("f_min", "40", Float, Pipeline, "lowest scale frequency in Hz"),
    key("n", "32", Int, Pipeline, "spectrogram side after resizing"),
    key("scale_kinds", "linear,log,logRe", Kinds, Pipeline, "spectrogram views to produce"),
    key("pitch_scales", "0.75,0.9,1.15,1.5", FloatList, Pipeline, "pitch-shift factors for short clips"),
    key("short_clip_s", "2", Float, Pipeline, "clips shorter than this are augmented"),
    key("variants", "lsgan011,lsgan-110,lsgan011-dfn,lsgan-110-dfn", Variants, Train, "model variants"),
    key("epsilon", "auto", FloatOrAuto, Train, "DFN tolerance, or auto"),
    key("penalty_weight", "1", Float, Train, "DFN penalty weight for DFN variants"),
    key("penalty_mode", "hinge", Penalty, Train, "hinge or lagrangian"),
    key("eta", "0.01", Float, Train, "lagrangian weight step"),
    key("symmetric_d_loss", "false", Bool, Train, "halve the discriminator loss"),
    key("latent_dim", "64", Int, Train, "generator input width"),
    key("gen_channels", "64", Int, Train, "generator base channels"),
    key("disc_channels", "16", Int, Train, "discriminator base channels"),
    key("batch_size", "32", Int, Train, "training batch size"),
    key("lr", "0.0002", Float, Train, "Adam learning rate"),
    key("beta1", "0.5", Float, Train, "Adam first-moment decay"),
    key("beta2", "0.999", Float, Train, "Adam second-moment decay"),
    key("ema_decay", "0.99", Float, Train, "decay of the real-data DFN average"),
    key("checkpoint_every", "500", Int, Train, "iterations between checkpoints"),
    key("max_iters", "5000", Int, Train, "training iterations per variant"),
    key("fid_every", "500", Int, Eval, "iterations between metric records"),
    key("fid_sample_count", "256", Int, Eval, "generated samples per FID"),
    key("snr_sample_count", "64", Int, Eval, "generated samples per SNR"),
    key("embed_seed", "1234", Int, Eval, "seed of the frozen feature embedding"),
    key("gmm_repeats", "5", Int, Gmm, "seeds per variant"),
    key("gmm_iters", "5000", Int, Gmm, "training iterations per run"),
    key("gmm_batch_size", "64", Int, Gmm, "batch size"),
    key("gmm_latent_dim", "8", Int, Gmm, "generator input width"),
    key("gmm_hidden", "64", Int, Gmm, "hidden width of the point networks"),
    key("gmm_lr", "0.001", Float, Gmm, "Adam learning rate for point generators"),
    key("gmm_epsilon", "auto", FloatOrAuto, Gmm, "DFN tolerance, or auto"),
    key("gmm_radius", "2", Float, Gmm, "mixture ring radius"),
    key("gmm_sigma", "0.05", Float, Gmm, "mixture component std"),
    key("gmm_eval_samples", "2500", Int, Gmm, "generated points per mode count"),
    key("capture_mult", "3", Float, Gmm, "capture radius in units of sigma"),
    key("min_fraction", "0.01", Float, Gmm, "minimum share for a detected mode"),
];

/// Keys that pick which runs to do rather than how a run behaves.
const SELECTION_KEYS: &[&str] = &["scale_kinds", "variants"];

fn spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// One of the four compared models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Lsgan011 { dfn: bool },
    LsganM110 { dfn: bool },
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Lsgan011 { dfn: false },
        Variant::LsganM110 { dfn: false },
        Variant::Lsgan011 { dfn: true },
        Variant::LsganM110 { dfn: true },
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Lsgan011 { dfn: false } => "lsgan011",
            Variant::Lsgan011 { dfn: true } => "lsgan011-dfn",
            Variant::LsganM110 { dfn: false } => "lsgan-110",
            Variant::LsganM110 { dfn: true } => "lsgan-110-dfn",
        }
    }

    /// Row label for summary tables.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Lsgan011 { dfn: false } => "LS-GAN_011",
            Variant::Lsgan011 { dfn: true } => "LS-GAN_011 with DFN",
            Variant::LsganM110 { dfn: false } => "LS-GAN_-110",
            Variant::LsganM110 { dfn: true } => "LS-GAN_-110 with DFN",
        }
    }

    pub fn uses_dfn(self) -> bool {
        matches!(self, Variant::Lsgan011 { dfn: true } | Variant::LsganM110 { dfn: true })
    }

    /// The same loss targets without the penalty.
    pub fn baseline(self) -> Variant {
        match self {
            Variant::Lsgan011 { .. } => Variant::Lsgan011 { dfn: false },
            Variant::LsganM110 { .. } => Variant::LsganM110 { dfn: false },
        }
    }

    fn targets(self) -> GanConfig {
        match self {
            Variant::Lsgan011 { .. } => GanConfig::lsgan_011(),
            Variant::LsganM110 { .. } => GanConfig::lsgan_m110(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| anyhow!("unknown variant `{s}` (expected one of lsgan011, lsgan-110, lsgan011-dfn, lsgan-110-dfn)"))
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn canonical_float(v: &str) -> Result<f64> {
    let x: f64 = v.parse().with_context(|| format!("`{v}` is not a number"))?;
    if !x.is_finite() {
        bail!("`{v}` is not finite");
    }
    Ok(x)
}

fn canonicalize(ty: Ty, raw: &str) -> Result<String> {
    let raw = raw.trim();
    Ok(match ty {
        Float => canonical_float(raw)?.to_string(),
        Int => raw
            .parse::<u64>()
            .with_context(|| format!("`{raw}` is not a non-negative integer"))?
            .to_string(),
        Bool => match raw.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => "true".into(),
            "false" | "no" | "0" | "off" => "false".into(),
            _ => bail!("`{raw}` is not a boolean"),
        },
        Text => raw.to_string(),
        FloatList => split_list(raw)
            .map(|s| canonical_float(s).map(|x| x.to_string()))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        Kinds => {
            let kinds = split_list(raw)
                .map(|s| s.parse::<ScaleKind>().map_err(|e| anyhow!(e)))
                .collect::<Result<Vec<_>>>()?;
            if kinds.is_empty() {
                bail!("at least one scale kind is required");
            }
            // Fixed order so the list reads like a set.
            let mut names: Vec<_> = ScaleKind::ALL.iter().filter(|k| kinds.contains(k)).map(|k| k.name()).collect();
            names.dedup();
            names.join(",")
        }
        Variants => {
            let vs = split_list(raw).map(str::parse).collect::<Result<Vec<Variant>>>()?;
            if vs.is_empty() {
                bail!("at least one variant is required");
            }
            Variant::ALL
                .iter()
                .filter(|v| vs.contains(v))
                .map(|v| v.name())
                .collect::<Vec<_>>()
                .join(",")
        }
        FloatOrAuto => {
            if raw.eq_ignore_ascii_case("auto") {
                "auto".into()
            } else {
                let x = canonical_float(raw)?;
                if x < 0.0 {
                    bail!("tolerance must be ≥ 0");
                }
                x.to_string()
            }
        }
        Penalty => match raw.to_ascii_lowercase().as_str() {
            "hinge" => "hinge".into(),
            "lagrangian" => "lagrangian".into(),
            _ => bail!("`{raw}` is not hinge or lagrangian"),
        },
    })
}

/// Parsed configuration: canonical values for every known key.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .map(|k| (k.name, canonicalize(k.ty, k.default).expect("valid default")))
            .collect();
        Self { values }
    }
}

impl ExperimentConfig {
    /// Defaults, then the file (if any), then `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            cfg.apply_text(&text).with_context(|| format!("in config {}", p.display()))?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| anyhow!("override `{o}` is not key=value"))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            let k = k.trim();
            if seen.contains(&k.to_string()) {
                bail!("line {}: duplicate key `{k}`", lineno + 1);
            }
            seen.push(k.to_string());
            self.set(k, v).with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let spec = spec(key).ok_or_else(|| anyhow!("unknown config key `{key}`"))?;
        let v = canonicalize(spec.ty, value).with_context(|| format!("key `{key}`"))?;
        self.values.insert(spec.name, v);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.usize("n");
        if n < 16 || !n.is_power_of_two() {
            bail!("n must be a power of two ≥ 16, got {n}");
        }
        if self.f64("sample_rate") <= 0.0 {
            bail!("sample_rate must be positive");
        }
        self.cwt_params().validate(self.f64("sample_rate")).map_err(|e| anyhow!(e))?;
        if self.f64_list("pitch_scales").iter().any(|&s| s <= 0.0) {
            bail!("pitch scales must be positive");
        }
        for v in Variant::ALL {
            self.gan_config(v).validate().map_err(|e| anyhow!(e))?;
        }
        if self.usize("fid_sample_count") < 2 {
            bail!("fid_sample_count must be ≥ 2");
        }
        if self.u64("fid_every") == 0 {
            bail!("fid_every must be ≥ 1");
        }
        if self.usize("gmm_batch_size") < 2 || self.usize("gmm_batch_size") % 2 != 0 {
            bail!("gmm_batch_size must be even and ≥ 2");
        }
        if self.usize("gmm_eval_samples") == 0 {
            bail!("gmm_eval_samples must be ≥ 1");
        }
        self.gmm_spec()?;
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).unwrap_or_else(|| panic!("unknown config key `{key}`"))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.get(key).parse().expect("canonical float")
    }

    pub fn u64(&self, key: &str) -> u64 {
        self.get(key).parse().expect("canonical integer")
    }

    pub fn usize(&self, key: &str) -> usize {
        self.u64(key) as usize
    }

    pub fn bool(&self, key: &str) -> bool {
        self.get(key) == "true"
    }

    pub fn f64_list(&self, key: &str) -> Vec<f64> {
        split_list(self.get(key)).map(|s| s.parse().expect("canonical float")).collect()
    }

    fn tolerance(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            "auto" => None,
            v => Some(v.parse().expect("canonical float")),
        }
    }

    pub fn seed(&self) -> u64 {
        self.u64("seed")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out"))
    }

    /// Manifest path, which must exist.
    pub fn manifest(&self) -> Result<PathBuf> {
        let m = self.get("manifest");
        if m.is_empty() {
            bail!("config key `manifest` is not set");
        }
        let p = PathBuf::from(m);
        if !p.is_file() {
            bail!("manifest {} does not exist", p.display());
        }
        Ok(p)
    }

    pub fn scale_kinds(&self) -> Vec<ScaleKind> {
        split_list(self.get("scale_kinds")).map(|s| s.parse().expect("canonical kind")).collect()
    }

    pub fn variants(&self) -> Vec<Variant> {
        split_list(self.get("variants")).map(|s| s.parse().expect("canonical variant")).collect()
    }

    pub fn cwt_params(&self) -> CwtParams {
        CwtParams {
            frame_ms: self.f64("frame_ms"),
            overlap: self.f64("overlap"),
            n_scales: self.usize("n_scales"),
            omega0: self.f64("omega0"),
            f_min: self.f64("f_min"),
            ..CwtParams::default()
        }
    }

    fn optimizer(&self) -> Adam {
        Adam {
            lr: self.f64("lr"),
            beta1: self.f64("beta1"),
            beta2: self.f64("beta2"),
            ..Adam::default()
        }
    }

    fn penalty_mode(&self) -> PenaltyMode {
        match self.get("penalty_mode") {
            "lagrangian" => PenaltyMode::Lagrangian { eta: self.f64("eta") },
            _ => PenaltyMode::Hinge,
        }
    }

    /// Spectrogram GAN settings for one variant.
    pub fn gan_config(&self, v: Variant) -> GanConfig {
        GanConfig {
            epsilon: self.tolerance("epsilon"),
            penalty_weight: if v.uses_dfn() { self.f64("penalty_weight") } else { 0.0 },
            penalty_mode: if v.uses_dfn() { self.penalty_mode() } else { PenaltyMode::Hinge },
            symmetric_d_loss: self.bool("symmetric_d_loss"),
            latent_dim: self.usize("latent_dim"),
            n: self.usize("n"),
            gen_channels: self.usize("gen_channels"),
            disc_channels: self.usize("disc_channels"),
            batch_size: self.usize("batch_size"),
            optimizer: self.optimizer(),
            ema_decay: self.f64("ema_decay"),
            seed: self.seed(),
            checkpoint_every: self.u64("checkpoint_every"),
            ..v.targets()
        }
    }

    /// Point-generator settings for one variant and repeat seed.
    pub fn gmm_gan_config(&self, v: Variant, seed: u64) -> GanConfig {
        GanConfig {
            epsilon: self.tolerance("gmm_epsilon"),
            latent_dim: self.usize("gmm_latent_dim"),
            batch_size: self.usize("gmm_batch_size"),
            optimizer: Adam {
                lr: self.f64("gmm_lr"),
                ..self.optimizer()
            },
            seed,
            checkpoint_every: u64::MAX,
            ..self.gan_config(v)
        }
    }

    pub fn gmm_spec(&self) -> Result<GmmSpec> {
        GmmSpec::ring(self.f64("gmm_radius"), self.f64("gmm_sigma")).map_err(|e| anyhow!(e))
    }

    /// Canonical `key=value` lines for the given sections, sorted by key.
    pub fn canonical(&self, sections: &[Section]) -> String {
        self.canonical_except(sections, &[])
    }

    fn canonical_except(&self, sections: &[Section], skip: &[&str]) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let s = spec(k).expect("known key").section;
            if s != Io && sections.contains(&s) && !skip.contains(k) {
                out.push_str(&format!("{k}={v}\n"));
            }
        }
        out
    }

    /// Hash over every non-path key.
    pub fn hash(&self) -> u64 {
        digest(&self.canonical(&[Pipeline, Train, Eval, Gmm]))
    }

    /// Hash of the spectrogram pipeline settings.
    pub fn pipeline_hash(&self) -> u64 {
        digest(&self.canonical_except(&[Pipeline], SELECTION_KEYS))
    }

    /// Hash binding a checkpoint to its data, training settings, variant and
    /// view.
    pub fn checkpoint_hash(&self, v: Variant, kind: ScaleKind) -> u64 {
        let mut text = self.canonical_except(&[Pipeline, Train], SELECTION_KEYS);
        text.push_str(&format!("@variant={v}\n@kind={kind}\n"));
        digest(&text)
    }

    /// Documented schema, one key per line.
    pub fn schema() -> String {
        KEYS.iter()
            .map(|k| format!("{:<18} {:<36} {}\n", k.name, k.default, k.doc))
            .collect()
    }
}

pub fn digest(text: &str) -> u64 {
    let d = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("digest length"))
}

pub fn hex(h: u64) -> String {
    format!("{h:016x}")
}

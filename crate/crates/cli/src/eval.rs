//! FID / SNR evaluation of generator checkpoints and the summary tables.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dfn_core::eval::{feature_embed, frechet_distance, gaussian_stats, FeatureStats};
use dfn_core::gan::{load_checkpoint, GanModel, Tensor4, TrainState};
use dfn_core::linalg::{dfn, Matrix};
use dfn_core::signal::{snr_db, ScaleKind, Signal, SignalError, Spectrogram};
use dfn_core::tensorfile::write_atomic;

use crate::config::{hex, ExperimentConfig, Variant};
use crate::data::{load_kind, KindData};
use crate::train::{read_metrics, train_dir};
use crate::Outcome;

/// Latent stream shared by every evaluation, so checkpoints are compared on
/// the same inputs.
const EVAL_LATENT_STREAM: u64 = 0x6576_616c_5f7a;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSummary {
    /// Mean over samples with nonzero generated power.
    pub mean: Option<f64>,
    pub count: usize,
    /// Samples whose generated signal had zero power.
    pub excluded: usize,
}

/// SNR of each generated spectrogram (in data units) against the real
/// reconstruction whose phase it borrows, cycling through the real set.
pub fn snr_over(real: &[Spectrogram], real_recon: &[Signal], generated: &[Matrix]) -> Result<SnrSummary> {
    if real.is_empty() || real.len() != real_recon.len() {
        bail!("missing real data for SNR");
    }
    let per: Vec<Result<Option<f64>>> = generated
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let r = &real[i % real.len()];
            let x = r.with_data(g.clone())?.to_signal()?;
            match snr_db(&real_recon[i % real.len()], &x) {
                Ok(v) => Ok(Some(v)),
                Err(SignalError::ZeroPowerGenerated) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let (mut sum, mut count, mut excluded) = (0.0, 0, 0);
    for v in per {
        match v? {
            Some(s) => {
                sum += s;
                count += 1;
            }
            None => excluded += 1,
        }
    }
    Ok(SnrSummary {
        mean: (count > 0).then(|| sum / count as f64),
        count,
        excluded,
    })
}

/// Fréchet distance between a real feature distribution and a generated
/// batch.
pub fn fid_against(real: &FeatureStats, generated: &Tensor4, embed_seed: u64) -> Result<f64> {
    let g = gaussian_stats(&feature_embed(generated, embed_seed)?)?;
    Ok(frechet_distance(real, &g)?)
}

fn mean_dfn(batch: &Tensor4) -> Result<f64> {
    let vals: Vec<f64> = (0..batch.n)
        .into_par_iter()
        .map(|i| dfn(&batch.matrix(i)))
        .collect::<Result<_, _>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fid: f64,
    pub snr: Option<SnrSummary>,
    /// Mean DFN of the generated batch minus that of the real set, both in
    /// normalized units.
    pub dfn_gap: f64,
}

/// Precomputed real-side statistics for one scale kind.
pub struct Evaluator<'a> {
    data: &'a KindData,
    real_stats: FeatureStats,
    real_recon: Vec<Signal>,
    real_dfn_mean: f64,
    embed_seed: u64,
    fid_count: usize,
    snr_count: usize,
    latent_seed: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(cfg: &ExperimentConfig, data: &'a KindData) -> Result<Self> {
        let embed_seed = cfg.u64("embed_seed");
        let real = data.real_normalized()?;
        if real.n < 2 {
            bail!("need at least 2 real spectrograms for FID, got {}", real.n);
        }
        let real_stats = gaussian_stats(&feature_embed(&real, embed_seed)?)?;
        let real_recon = data
            .real
            .par_iter()
            .map(|s| s.to_signal())
            .collect::<Result<Vec<_>, _>>()
            .context("reconstructing real audio")?;
        Ok(Self {
            data,
            real_stats,
            real_recon,
            real_dfn_mean: mean_dfn(&real)?,
            embed_seed,
            fid_count: cfg.usize("fid_sample_count"),
            snr_count: cfg.usize("snr_sample_count"),
            latent_seed: cfg.seed() ^ EVAL_LATENT_STREAM,
        })
    }

    fn latent(&self, count: usize, dim: usize) -> Tensor4 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.latent_seed);
        let data = (0..count * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Tensor4::new((count, dim, 1, 1), data).expect("finite normals")
    }

    pub fn evaluate(&self, model: &GanModel, gen_params: &[f64], with_snr: bool) -> Result<Evaluation> {
        let count = if with_snr { self.fid_count.max(self.snr_count) } else { self.fid_count };
        let (dim, _, _) = model.generator.input_shape();
        let generated = model.generator.apply(gen_params, &self.latent(count, dim))?;
        let fid_batch = generated.select(&(0..self.fid_count).collect::<Vec<_>>());
        let fid = fid_against(&self.real_stats, &fid_batch, self.embed_seed)?;
        let dfn_gap = mean_dfn(&fid_batch)? - self.real_dfn_mean;
        let snr = if with_snr {
            let ms: Vec<Matrix> = (0..self.snr_count).map(|i| self.data.norm.inverse(&generated.matrix(i))).collect();
            Some(snr_over(&self.data.real, &self.real_recon, &ms)?)
        } else {
            None
        };
        Ok(Evaluation { fid, snr, dfn_gap })
    }
}

pub fn checkpoint_name(iter: u64) -> String {
    format!("ckpt_{iter:08}.dfnc")
}

/// Checkpoints in a training directory, ordered by iteration.
pub fn list_checkpoints(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("ckpt_") && n.ends_with(".dfnc"))
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Loads a checkpoint and refuses it unless it was trained with this
/// configuration, variant and scale kind.
pub fn load_matching(cfg: &ExperimentConfig, v: Variant, kind: ScaleKind, path: &Path) -> Result<TrainState> {
    let state = load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
    let expected = cfg.checkpoint_hash(v, kind);
    if state.config_hash != expected {
        bail!(
            "{} was trained with a different configuration (hash {}, expected {}); refusing to evaluate",
            path.display(),
            hex(state.config_hash),
            hex(expected)
        );
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// FID on every checkpoint, SNR at the best one.
    Fid,
    /// SNR at the best checkpoint according to the training metric log.
    Snr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: String,
    pub checkpoint: String,
    pub best_iter: u64,
    pub fid_init: Option<f64>,
    pub fid_best: Option<f64>,
    pub snr_mean: Option<f64>,
    pub snr_count: usize,
    pub snr_excluded: usize,
    pub checkpoints_evaluated: usize,
}

/// One row per evaluated scale kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindRow {
    pub kind: String,
    pub variants: Vec<VariantResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<KindRow>,
}

impl EvalReport {
    fn lookup(&self, v: Variant, kind: ScaleKind) -> Option<&VariantResult> {
        self.rows
            .iter()
            .find(|r| r.kind == kind.name())?
            .variants
            .iter()
            .find(|x| x.variant == v.name())
    }

    /// Markdown tables with models as rows and scale kinds as columns.
    pub fn summary_tables(&self, variants: &[Variant]) -> String {
        let kinds: Vec<ScaleKind> = ScaleKind::ALL
            .into_iter()
            .filter(|k| self.rows.iter().any(|r| r.kind == k.name()))
            .collect();
        let mut out = String::new();
        let metrics: [(&str, fn(&VariantResult) -> Option<f64>); 2] =
            [("FID", |r| r.fid_best), ("SNR (dB)", |r| r.snr_mean)];
        for (title, get) in metrics {
            out.push_str(&format!("{title}\n\n| Model |"));
            for k in &kinds {
                out.push_str(&format!(" {k} |"));
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(kinds.len()));
            out.push('\n');
            for &v in variants {
                if kinds.iter().all(|&k| self.lookup(v, k).is_none()) {
                    continue;
                }
                out.push_str(&format!("| {} |", v.label()));
                for &k in &kinds {
                    match self.lookup(v, k).and_then(get) {
                        Some(x) => out.push_str(&format!(" {x:.2} |")),
                        None => out.push_str(" - |"),
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

fn iter_of(path: &Path) -> Option<u64> {
    path.file_stem()?.to_str()?.strip_prefix("ckpt_")?.parse().ok()
}

fn rel_name(cfg: &ExperimentConfig, path: &Path) -> String {
    path.strip_prefix(cfg.out_dir()).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

fn evaluate_variant(
    cfg: &ExperimentConfig,
    ev: &Evaluator,
    v: Variant,
    kind: ScaleKind,
    only: Option<&Path>,
    mode: EvalMode,
) -> Result<VariantResult> {
    let model = GanModel::image(&cfg.gan_config(v))?;
    let ckpts = match only {
        Some(p) => vec![p.to_path_buf()],
        None => list_checkpoints(&train_dir(cfg, v, kind))?,
    };
    if ckpts.is_empty() {
        bail!("no checkpoints for {v}/{kind}");
    }

    let (best, fid_init, fid_best, evaluated) = match mode {
        EvalMode::Fid => {
            let fids: Vec<(u64, f64)> = ckpts
                .par_iter()
                .map(|p| {
                    let s = load_matching(cfg, v, kind, p)?;
                    Ok((s.iter, ev.evaluate(&model, &s.gen_params_f64(), false)?.fid))
                })
                .collect::<Result<_>>()?;
            let best = (0..fids.len())
                .min_by(|&a, &b| fids[a].1.total_cmp(&fids[b].1).then(fids[a].0.cmp(&fids[b].0)))
                .expect("nonempty");
            let init = fids.iter().find(|f| f.0 == 0).map(|f| f.1);
            (ckpts[best].clone(), init, Some(fids[best].1), fids.len())
        }
        EvalMode::Snr => {
            let path = match only {
                Some(p) => p.to_path_buf(),
                None => {
                    let log = read_metrics(&train_dir(cfg, v, kind))?;
                    let have: Vec<u64> = ckpts.iter().filter_map(|p| iter_of(p)).collect();
                    let best = log
                        .iter()
                        .filter(|r| have.contains(&r.iter))
                        .min_by(|a, b| a.fid.total_cmp(&b.fid).then(a.iter.cmp(&b.iter)))
                        .ok_or_else(|| anyhow!("metric log has no record for any checkpoint of {v}/{kind}"))?;
                    train_dir(cfg, v, kind).join(checkpoint_name(best.iter))
                }
            };
            (path, None, None, 1)
        }
    };

    let state = load_matching(cfg, v, kind, &best)?;
    let e = ev.evaluate(&model, &state.gen_params_f64(), true)?;
    let snr = e.snr.expect("requested");
    Ok(VariantResult {
        variant: v.name().into(),
        checkpoint: rel_name(cfg, &best),
        best_iter: state.iter,
        fid_init,
        fid_best: fid_best.or(Some(e.fid)),
        snr_mean: snr.mean,
        snr_count: snr.count,
        snr_excluded: snr.excluded,
        checkpoints_evaluated: evaluated,
    })
}

/// `(variant, kind)` from `.../train/<variant>/<kind>/ckpt_*.dfnc`.
fn identify(path: &Path) -> Result<(Variant, ScaleKind)> {
    let kind_dir = path.parent().ok_or_else(|| anyhow!("checkpoint path has no parent"))?;
    let var_dir = kind_dir.parent().ok_or_else(|| anyhow!("checkpoint path has no variant directory"))?;
    let name = |p: &Path| p.file_name().and_then(|n| n.to_str()).map(str::to_string).unwrap_or_default();
    let kind: ScaleKind = name(kind_dir).parse().map_err(|e| anyhow!("{e}"))?;
    Ok((name(var_dir).parse()?, kind))
}

pub const EVAL_DIR: &str = "eval";

/// Evaluates all trained variants (or one checkpoint) and writes the report
/// and summary tables under `out/eval`.
pub fn cmd_eval(cfg: &ExperimentConfig, checkpoint: Option<&Path>, mode: EvalMode) -> Result<(Outcome, EvalReport)> {
    let jobs: Vec<(ScaleKind, Vec<Variant>)> = match checkpoint {
        Some(p) => {
            let (v, k) = identify(p).with_context(|| format!("identifying {}", p.display()))?;
            vec![(k, vec![v])]
        }
        None => cfg.scale_kinds().into_iter().map(|k| (k, cfg.variants())).collect(),
    };

    let (mut total, mut failed) = (0, 0);
    let mut rows = Vec::new();
    for (kind, variants) in jobs {
        let data = load_kind(cfg, kind)?;
        let ev = Evaluator::new(cfg, &data)?;
        let mut results = Vec::new();
        for v in variants {
            total += 1;
            match evaluate_variant(cfg, &ev, v, kind, checkpoint, mode) {
                Ok(r) => results.push(r),
                Err(e) if checkpoint.is_some() => return Err(e),
                Err(e) => {
                    eprintln!("error: {v}/{kind}: {e:#}");
                    failed += 1;
                }
            }
        }
        rows.push(KindRow {
            kind: kind.name().into(),
            variants: results,
        });
    }

    let report = EvalReport {
        config_hash: hex(cfg.hash()),
        seed: cfg.seed(),
        rows,
    };
    let dir = cfg.out_dir().join(EVAL_DIR);
    std::fs::create_dir_all(&dir)?;
    let stem = match mode {
        EvalMode::Fid => "report",
        EvalMode::Snr => "snr_report",
    };
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_atomic(&dir.join(format!("{stem}.json")), &json)?;
    write_atomic(&dir.join(format!("{stem}.md")), report.summary_tables(&Variant::ALL).as_bytes())?;
    Ok((Outcome::from_counts(total, failed), report))
}

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

use dfn_core::gan::{save_checkpoint, train_step, GanError, GanModel, StepReport, Tensor4, TrainState};
use dfn_core::linalg::Matrix;
use dfn_core::signal::ScaleKind;

use crate::config::{hex, ExperimentConfig, Variant};
use crate::data::{load_kind, KindData};
use crate::eval::{checkpoint_name, Evaluator};
use crate::Outcome;

pub const TRAIN_DIR: &str = "train";
pub const METRICS_FILE: &str = "metrics.jsonl";

pub fn train_dir(cfg: &ExperimentConfig, v: Variant, kind: ScaleKind) -> PathBuf {
    cfg.out_dir().join(TRAIN_DIR).join(v.name()).join(kind.name())
}

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub iter: u64,
    pub fid: f64,
    pub snr_mean: Option<f64>,
    pub snr_excluded: usize,
    /// Only meaningful for point generators.
    pub modes_detected: Option<usize>,
    pub dfn_gap: f64,
    /// `penalty` when the gap drives the generator, `reference` otherwise.
    pub dfn_gap_role: String,
    pub d_loss: Option<f64>,
    pub g_loss: Option<f64>,
    pub lambda_p: f64,
    pub epsilon: Option<f64>,
    pub skipped_dfn_grads: usize,
    pub config_hash: String,
    pub seed: u64,
}

pub fn read_metrics(dir: &Path) -> Result<Vec<MetricRecord>> {
    let path = dir.join(METRICS_FILE);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub variant: Variant,
    pub kind: ScaleKind,
    pub iters: u64,
    pub checkpoints: usize,
    pub final_fid: f64,
}

struct Run<'a> {
    v: Variant,
    dir: PathBuf,
    model: GanModel,
    ev: &'a Evaluator<'a>,
    log: std::fs::File,
    checkpoints: usize,
    last_fid: f64,
}

impl Run<'_> {
    fn checkpoint(&mut self, state: &TrainState) -> Result<()> {
        save_checkpoint(state, self.dir.join(checkpoint_name(state.iter)))?;
        self.checkpoints += 1;
        Ok(())
    }

    fn record(&mut self, state: &TrainState, step: Option<&StepReport>) -> Result<()> {
        let e = self.ev.evaluate(&self.model, &state.gen_params_f64(), true)?;
        let snr = e.snr.expect("requested");
        let rec = MetricRecord {
            iter: state.iter,
            fid: e.fid,
            snr_mean: snr.mean,
            snr_excluded: snr.excluded,
            modes_detected: None,
            dfn_gap: e.dfn_gap,
            dfn_gap_role: if state.lambda_p > 0.0 { "penalty" } else { "reference" }.into(),
            d_loss: step.map(|s| s.d_loss),
            g_loss: step.map(|s| s.g.total),
            lambda_p: state.lambda_p,
            epsilon: state.epsilon,
            skipped_dfn_grads: step.map_or(0, |s| s.skipped_dfn_grads),
            config_hash: hex(state.config_hash),
            seed: state.seed,
        };
        self.last_fid = e.fid;
        let mut line = serde_json::to_string(&rec)?;
        line.push('\n');
        self.log.write_all(line.as_bytes())?;
        self.log.flush()?;
        Ok(())
    }
}

fn clear_run_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if (name.starts_with("ckpt_") && name.ends_with(".dfnc")) || name == METRICS_FILE {
            std::fs::remove_file(&p)?;
        }
    }
    Ok(())
}

/// Trains one variant on one scale kind from scratch.
pub fn train_variant(
    cfg: &ExperimentConfig,
    v: Variant,
    data: &KindData,
    ev: &Evaluator,
) -> Result<TrainSummary> {
    let gcfg = cfg.gan_config(v);
    let model = GanModel::image(&gcfg)?;
    let dir = train_dir(cfg, v, data.kind);
    clear_run_dir(&dir)?;
    let log = std::fs::File::create(dir.join(METRICS_FILE))?;
    let mut run = Run {
        v,
        dir,
        model,
        ev,
        log,
        checkpoints: 0,
        last_fid: f64::NAN,
    };

    let pool: Vec<Matrix> = data.train_normalized();
    let max_iters = cfg.u64("max_iters");
    let fid_every = cfg.u64("fid_every");
    let mut state = TrainState::new(&run.model, &gcfg, cfg.checkpoint_hash(v, data.kind));
    run.checkpoint(&state)?;
    run.record(&state, None)?;

    while state.iter < max_iters {
        let picks: Vec<Matrix> = (0..gcfg.batch_size)
            .map(|_| pool[state.rng.gen_range(0..pool.len())].clone())
            .collect();
        let real = Tensor4::from_matrices(&picks)?;
        let z = state.sample_latent(gcfg.batch_size, gcfg.latent_dim);
        let step = match train_step(&run.model, &gcfg, &mut state, &real, &z) {
            Ok(s) => s,
            Err(e @ GanError::NonFiniteLoss { .. }) => {
                return Err(anyhow::Error::new(e).context(format!(
                    "{}/{}: training aborted; last good checkpoint kept in {}",
                    run.v,
                    data.kind,
                    run.dir.display()
                )))
            }
            Err(e) => return Err(e.into()),
        };
        let last = state.iter == max_iters;
        if step.checkpoint_due || last {
            run.checkpoint(&state)?;
        }
        if state.iter % fid_every == 0 || last {
            run.record(&state, Some(&step))?;
        }
    }

    Ok(TrainSummary {
        variant: v,
        kind: data.kind,
        iters: state.iter,
        checkpoints: run.checkpoints,
        final_fid: run.last_fid,
    })
}

/// Trains every configured variant on every configured scale kind, one
/// after another.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<(Outcome, Vec<TrainSummary>)> {
    let (mut total, mut failed) = (0, 0);
    let mut done = Vec::new();
    for kind in cfg.scale_kinds() {
        let data = load_kind(cfg, kind)?;
        let ev = Evaluator::new(cfg, &data)?;
        for v in cfg.variants() {
            total += 1;
            match train_variant(cfg, v, &data, &ev) {
                Ok(s) => done.push(s),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    failed += 1;
                }
            }
        }
    }
    Ok((Outcome::from_counts(total, failed), done))
}

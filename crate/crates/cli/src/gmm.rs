//! Mode-collapse benchmark on a ring of ten Gaussians.

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use dfn_core::eval::{count_modes, gmm_sample_with, GmmSpec};
use dfn_core::gan::{train_step, GanModel, Tensor4, TrainState};
use dfn_core::tensorfile::write_atomic;

use crate::config::{hex, ExperimentConfig, Variant};

pub const GMM_DIR: &str = "gmm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmRun {
    pub seed: u64,
    pub modes_detected: usize,
    pub per_mode: Vec<usize>,
    pub final_g_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmRow {
    pub variant: String,
    pub mean_modes: f64,
    /// Per-mode sample counts summed over runs.
    pub per_mode_total: Vec<usize>,
    pub runs: Vec<GmmRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmReport {
    pub config_hash: String,
    pub seed: u64,
    pub iters: u64,
    pub eval_samples: usize,
    pub rows: Vec<GmmRow>,
}

impl GmmReport {
    pub fn row(&self, v: Variant) -> Option<&GmmRow> {
        self.rows.iter().find(|r| r.variant == v.name())
    }

    pub fn summary_table(&self) -> String {
        let mut out = String::from("| Model | mean modes | runs |\n|---|---|---|\n");
        for r in &self.rows {
            let label = r.variant.parse::<Variant>().map(|v| v.label()).unwrap_or(&r.variant);
            let runs: Vec<String> = r.runs.iter().map(|x| x.modes_detected.to_string()).collect();
            out.push_str(&format!("| {label} | {:.2} | {} |\n", r.mean_modes, runs.join(" ")));
        }
        out
    }
}

/// Independent latent stream for the final mode count.
const GMM_EVAL_STREAM: u64 = 0x676d_6d5f_6576;

/// Trains one point generator and counts the modes of its samples.
pub fn gmm_run(cfg: &ExperimentConfig, spec: &GmmSpec, v: Variant, seed: u64) -> Result<GmmRun> {
    let gcfg = cfg.gmm_gan_config(v, seed);
    let model = GanModel::points(gcfg.latent_dim, cfg.usize("gmm_hidden"))?;
    let mut state = TrainState::new(&model, &gcfg, cfg.hash());
    let mut last = None;
    for _ in 0..cfg.u64("gmm_iters") {
        let pts = gmm_sample_with(spec, gcfg.batch_size, &mut state.rng);
        let real = Tensor4::from_rows(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>())?;
        let z = state.sample_latent(gcfg.batch_size, gcfg.latent_dim);
        last = Some(train_step(&model, &gcfg, &mut state, &real, &z)?.g.total);
    }

    let n = cfg.usize("gmm_eval_samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ GMM_EVAL_STREAM);
    let zdata = (0..n * gcfg.latent_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let z = Tensor4::new((n, gcfg.latent_dim, 1, 1), zdata)?;
    let out = model.generator.apply(&state.gen_params_f64(), &z)?;
    let pts: Vec<[f64; 2]> = (0..n).map(|i| [out.sample(i)[0], out.sample(i)[1]]).collect();
    let mc = count_modes(&pts, spec, cfg.f64("capture_mult"), cfg.f64("min_fraction"));
    Ok(GmmRun {
        seed,
        modes_detected: mc.detected,
        per_mode: mc.per_mode,
        final_g_loss: last,
    })
}

/// All four variants, `gmm_repeats` seeds each. Seeds are shared across
/// variants so each DFN run starts from the same weights as its baseline.
pub fn cmd_gmm_benchmark(cfg: &ExperimentConfig) -> Result<GmmReport> {
    let spec = cfg.gmm_spec()?;
    let repeats = cfg.u64("gmm_repeats");
    let mut rows = Vec::new();
    for v in Variant::ALL {
        let runs = (0..repeats)
            .map(|r| gmm_run(cfg, &spec, v, cfg.seed().wrapping_add(r)))
            .collect::<Result<Vec<_>>>()?;
        let mut per_mode_total = vec![0; spec.centers.len()];
        for run in &runs {
            for (t, c) in per_mode_total.iter_mut().zip(&run.per_mode) {
                *t += c;
            }
        }
        let mean_modes = runs.iter().map(|r| r.modes_detected as f64).sum::<f64>() / runs.len().max(1) as f64;
        rows.push(GmmRow {
            variant: v.name().into(),
            mean_modes,
            per_mode_total,
            runs,
        });
    }
    let report = GmmReport {
        config_hash: hex(cfg.hash()),
        seed: cfg.seed(),
        iters: cfg.u64("gmm_iters"),
        eval_samples: cfg.usize("gmm_eval_samples"),
        rows,
    };
    let dir = cfg.out_dir().join(GMM_DIR);
    std::fs::create_dir_all(&dir)?;
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_atomic(&dir.join("report.json"), &json)?;
    write_atomic(&dir.join("report.md"), report.summary_table().as_bytes())?;
    Ok(report)
}

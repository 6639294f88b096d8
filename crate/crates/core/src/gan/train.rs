use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::network::{discriminator_layers, generator_layers};
use super::{d_loss, d_loss_grad, g_loss, Adam, ForwardCache, GLossParts, GanError, LayerSpec, Network, Tensor4};
use crate::linalg::{dfn, dfn_gradient, dfn_gradient_fd, suggest_epsilon, EpsilonOptions, GradientOptions, LinalgError, Matrix};

/// Largest side for which a defective DFN gradient falls back to finite
/// differences; larger samples are skipped for that step instead.
const FD_FALLBACK_MAX_SIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyMode {
    /// Fixed weight.
    Hinge,
    /// Weight grows by `eta·max(0, |gap| − ε)` after every step.
    Lagrangian { eta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `None` picks a tolerance from the first real batch.
    pub epsilon: Option<f64>,
    pub penalty_weight: f64,
    pub penalty_mode: PenaltyMode,
    pub symmetric_d_loss: bool,
    pub latent_dim: usize,
    pub n: usize,
    pub gen_channels: usize,
    pub disc_channels: usize,
    pub batch_size: usize,
    pub optimizer: Adam,
    pub ema_decay: f64,
    pub seed: u64,
    pub checkpoint_every: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            a: 0.0,
            b: 1.0,
            c: 1.0,
            epsilon: None,
            penalty_weight: 1.0,
            penalty_mode: PenaltyMode::Hinge,
            symmetric_d_loss: false,
            latent_dim: 64,
            n: 32,
            gen_channels: 64,
            disc_channels: 16,
            batch_size: 32,
            optimizer: Adam::default(),
            ema_decay: 0.99,
            seed: 0,
            checkpoint_every: 500,
        }
    }
}

impl GanConfig {
    /// Targets `a = 0, b = c = 1`.
    pub fn lsgan_011() -> Self {
        Self::default()
    }

    /// Targets `a = −1, b = 1, c = 0`.
    pub fn lsgan_m110() -> Self {
        Self {
            a: -1.0,
            b: 1.0,
            c: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GanError> {
        let bad = |m: &str| Err(GanError::InvalidConfig(m.to_string()));
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0 && eps.is_finite()) {
                return bad("epsilon must be finite and ≥ 0");
            }
        }
        if !(self.penalty_weight >= 0.0 && self.penalty_weight.is_finite()) {
            return bad("penalty weight must be finite and ≥ 0");
        }
        if let PenaltyMode::Lagrangian { eta } = self.penalty_mode {
            if !(eta >= 0.0 && eta.is_finite()) {
                return bad("lagrangian step must be finite and ≥ 0");
            }
        }
        if self.n < 16 || !self.n.is_power_of_two() {
            return bad("side n must be a power of two ≥ 16");
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be ≥ 1");
        }
        if self.batch_size < 2 {
            return bad("batch size must be ≥ 2");
        }
        if self.latent_dim == 0 || self.gen_channels == 0 || self.disc_channels == 0 {
            return bad("network dimensions must be positive");
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return bad("ema decay must lie in [0, 1)");
        }
        if !(self.optimizer.lr >= 0.0) {
            return bad("learning rate must be ≥ 0");
        }
        Ok(())
    }
}

/// How generator outputs are turned into square matrices for DFN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfnView {
    /// Each single-channel `n × n` sample is one matrix.
    Image,
    /// Consecutive 2-D points are stacked as the rows of a 2×2 matrix.
    PointPairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub generator: Network,
    pub discriminator: Network,
    pub view: DfnView,
}

impl GanModel {
    pub fn image(cfg: &GanConfig) -> Result<Self, GanError> {
        Ok(Self {
            generator: generator_layers(cfg.latent_dim, cfg.n, cfg.gen_channels)?,
            discriminator: discriminator_layers(cfg.n, cfg.disc_channels)?,
            view: DfnView::Image,
        })
    }

    /// Two-hidden-layer perceptrons producing and scoring 2-D points.
    pub fn points(latent_dim: usize, hidden: usize) -> Result<Self, GanError> {
        let dense = |c: usize| LayerSpec::Dense { out_c: c, out_h: 1, out_w: 1 };
        let generator = Network::new(
            (latent_dim, 1, 1),
            vec![dense(hidden), LayerSpec::Relu, dense(hidden), LayerSpec::Relu, dense(2)],
        )?;
        let leaky = LayerSpec::LeakyRelu { slope: 0.2 };
        let discriminator = Network::new((2, 1, 1), vec![dense(hidden), leaky, dense(hidden), leaky, dense(1)])?;
        Ok(Self {
            generator,
            discriminator,
            view: DfnView::PointPairs,
        })
    }
}

/// Square matrices seen by the DFN term, one per sample or per pair.
pub fn batch_dfn(view: DfnView, x: &Tensor4) -> Result<Vec<Matrix>, GanError> {
    match view {
        DfnView::Image => {
            if x.c != 1 || x.h != x.w {
                return Err(GanError::ShapeMismatch(format!("DFN needs (_, 1, n, n), got {:?}", x.dims())));
            }
            Ok((0..x.n).map(|i| x.matrix(i)).collect())
        }
        DfnView::PointPairs => {
            if x.sample_len() != 2 {
                return Err(GanError::ShapeMismatch(format!("DFN pairs need 2-D points, got {:?}", x.dims())));
            }
            Ok((0..x.n / 2)
                .map(|k| {
                    let (p, q) = (x.sample(2 * k), x.sample(2 * k + 1));
                    Matrix::from_rows(&[p, q])
                })
                .collect())
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn dfn_values(ms: &[Matrix]) -> Result<Vec<f64>, GanError> {
    ms.par_iter()
        .map(|m| dfn(m).map_err(GanError::from))
        .collect()
}

/// Training state with `f32` parameters and moments.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub gen_params: Vec<f32>,
    pub disc_params: Vec<f32>,
    pub gen_m: Vec<f32>,
    pub gen_v: Vec<f32>,
    pub disc_m: Vec<f32>,
    pub disc_v: Vec<f32>,
    pub iter: u64,
    pub rng: ChaCha8Rng,
    pub dfn_real_ema: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda_p: f64,
    pub seed: u64,
    pub config_hash: u64,
}

impl TrainState {
    pub fn new(model: &GanModel, cfg: &GanConfig, config_hash: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let to32 = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect::<Vec<f32>>();
        let gen_params = to32(model.generator.init_params(&mut rng));
        let disc_params = to32(model.discriminator.init_params(&mut rng));
        Self {
            gen_m: vec![0.0; gen_params.len()],
            gen_v: vec![0.0; gen_params.len()],
            disc_m: vec![0.0; disc_params.len()],
            disc_v: vec![0.0; disc_params.len()],
            gen_params,
            disc_params,
            iter: 0,
            rng,
            dfn_real_ema: None,
            epsilon: cfg.epsilon,
            lambda_p: cfg.penalty_weight,
            seed: cfg.seed,
            config_hash,
        }
    }

    pub fn gen_params_f64(&self) -> Vec<f64> {
        self.gen_params.iter().map(|&v| v as f64).collect()
    }

    pub fn disc_params_f64(&self) -> Vec<f64> {
        self.disc_params.iter().map(|&v| v as f64).collect()
    }

    /// Standard normal latent batch drawn from the state's generator.
    pub fn sample_latent(&mut self, batch: usize, dim: usize) -> Tensor4 {
        let data = (0..batch * dim).map(|_| StandardNormal.sample(&mut self.rng)).collect();
        Tensor4::new((batch, dim, 1, 1), data).expect("finite normals")
    }

    /// Digest of the serialized state.
    pub fn fingerprint(&self) -> u64 {
        let digest = Sha256::digest(super::checkpoint::to_bytes(self));
        u64::from_le_bytes(digest[..8].try_into().expect("digest length"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub iter: u64,
    pub d_loss: f64,
    pub g: GLossParts,
    pub dfn_fake_mean: f64,
    pub dfn_real_batch: f64,
    pub dfn_real_ema: f64,
    pub epsilon: f64,
    pub lambda_p: f64,
    /// Samples whose DFN gradient was skipped for a clustered spectrum.
    pub skipped_dfn_grads: usize,
    pub checkpoint_due: bool,
}

/// Generator objective value and gradient for fixed discriminator
/// parameters and real-DFN reference.
pub struct GeneratorObjective {
    pub parts: GLossParts,
    pub dfn_fake_mean: f64,
    pub grad: Vec<f64>,
    pub skipped_dfn_grads: usize,
}

#[allow(clippy::too_many_arguments)]
fn objective_from_cache(
    model: &GanModel,
    cfg: &GanConfig,
    gen_params: &[f64],
    cache: &ForwardCache,
    disc_params: &[f64],
    dfn_real: f64,
    epsilon: f64,
    lambda: f64,
) -> Result<GeneratorObjective, GanError> {
    let fake = cache.output();
    let batch = fake.n;
    let d_cache = model.discriminator.forward(disc_params, fake)?;
    let scores = d_cache.output().data.clone();

    let mats = batch_dfn(model.view, fake)?;
    let values = dfn_values(&mats)?;
    let dfn_fake_mean = mean(&values);
    let parts = g_loss(&scores, cfg.c, dfn_fake_mean, dfn_real, epsilon, lambda)?;

    let g_scores: Vec<f64> = scores.iter().map(|s| (s - cfg.c) / batch as f64).collect();
    let g_scores = Tensor4::new(d_cache.output().dims(), g_scores).map_err(|_| GanError::NonFiniteGradient("scores"))?;
    let (_, mut g_fake) = model.discriminator.backward(disc_params, &d_cache, &g_scores)?;

    let mut skipped = 0;
    if parts.penalty > 0.0 {
        let coef = lambda * parts.gap.signum() / mats.len() as f64;
        let opts = GradientOptions::default();
        let grads: Vec<Option<Matrix>> = mats
            .par_iter()
            .map(|m| match dfn_gradient(m, &opts) {
                Ok(g) => Ok(Some(g)),
                Err(LinalgError::DefectiveMatrix(_)) if m.rows() <= FD_FALLBACK_MAX_SIDE => {
                    dfn_gradient_fd(m).map(Some)
                }
                Err(LinalgError::DefectiveMatrix(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_, _>>()?;
        for (k, g) in grads.iter().enumerate() {
            let Some(g) = g else {
                skipped += 1;
                continue;
            };
            match model.view {
                DfnView::Image => {
                    for (d, v) in g_fake.sample_mut(k).iter_mut().zip(g.as_slice()) {
                        *d += coef * v;
                    }
                }
                DfnView::PointPairs => {
                    for r in 0..2 {
                        for (d, v) in g_fake.sample_mut(2 * k + r).iter_mut().zip(g.row(r)) {
                            *d += coef * v;
                        }
                    }
                }
            }
        }
    }
    let (grad, _) = model.generator.backward(gen_params, cache, &g_fake)?;
    Ok(GeneratorObjective {
        parts,
        dfn_fake_mean,
        grad,
        skipped_dfn_grads: skipped,
    })
}

/// Value and gradient of `½·mean((D(G(z)) − c)²) + λ·max(0, |gap| − ε)`
/// with respect to the generator parameters.
#[allow(clippy::too_many_arguments)]
pub fn generator_objective(
    model: &GanModel,
    cfg: &GanConfig,
    gen_params: &[f64],
    disc_params: &[f64],
    z: &Tensor4,
    dfn_real: f64,
    epsilon: f64,
    lambda: f64,
) -> Result<GeneratorObjective, GanError> {
    let cache = model.generator.forward(gen_params, z)?;
    objective_from_cache(model, cfg, gen_params, &cache, disc_params, dfn_real, epsilon, lambda)
}

fn resolve_epsilon(mats: &[Matrix]) -> Result<f64, GanError> {
    let opts = EpsilonOptions::default();
    match suggest_epsilon(mats, &opts) {
        Ok(eps) => Ok(eps),
        Err(LinalgError::AllZeroSpectrum) => Ok(opts.eps_min),
        Err(e) => Err(e.into()),
    }
}

/// One discriminator update followed by one generator update on the same
/// latent batch.
pub fn train_step(
    model: &GanModel,
    cfg: &GanConfig,
    state: &mut TrainState,
    real: &Tensor4,
    z: &Tensor4,
) -> Result<StepReport, GanError> {
    let (dc, dh, dw) = model.discriminator.input_shape();
    if (real.c, real.h, real.w) != (dc, dh, dw) {
        return Err(GanError::ShapeMismatch(format!("real batch {:?}", real.dims())));
    }
    let iter = state.iter + 1;

    let real_mats = batch_dfn(model.view, real)?;
    let dfn_real_batch = mean(&dfn_values(&real_mats)?);
    let epsilon = match state.epsilon {
        Some(e) => e,
        None => resolve_epsilon(&real_mats)?,
    };
    let ema = match state.dfn_real_ema {
        Some(prev) => cfg.ema_decay * prev + (1.0 - cfg.ema_decay) * dfn_real_batch,
        None => dfn_real_batch,
    };

    let gp = state.gen_params_f64();
    let dp = state.disc_params_f64();
    let g_cache = model.generator.forward(&gp, z)?;
    let fake = g_cache.output();

    let cr = model.discriminator.forward(&dp, real)?;
    let cf = model.discriminator.forward(&dp, fake)?;
    let (sr, sf) = (&cr.output().data, &cf.output().data);
    let dl = d_loss(sr, sf, cfg.a, cfg.b, cfg.symmetric_d_loss)?;
    if !dl.is_finite() {
        return Err(GanError::NonFiniteLoss {
            iter,
            detail: format!("discriminator loss {dl}; real scores {sr:?}; fake scores {sf:?}"),
        });
    }
    let (gr, gf) = d_loss_grad(sr, sf, cfg.a, cfg.b, cfg.symmetric_d_loss);
    let gr = Tensor4::new(cr.output().dims(), gr).map_err(|_| GanError::NonFiniteGradient("real scores"))?;
    let gf = Tensor4::new(cf.output().dims(), gf).map_err(|_| GanError::NonFiniteGradient("fake scores"))?;
    let (mut d_grad, _) = model.discriminator.backward(&dp, &cr, &gr)?;
    let (d_grad_f, _) = model.discriminator.backward(&dp, &cf, &gf)?;
    for (a, b) in d_grad.iter_mut().zip(&d_grad_f) {
        *a += b;
    }
    let mut disc_params = state.disc_params.clone();
    let (mut disc_m, mut disc_v) = (state.disc_m.clone(), state.disc_v.clone());
    cfg.optimizer.step(&mut disc_params, &mut disc_m, &mut disc_v, &d_grad, iter);

    let dp2: Vec<f64> = disc_params.iter().map(|&v| v as f64).collect();
    let obj = objective_from_cache(model, cfg, &gp, &g_cache, &dp2, ema, epsilon, state.lambda_p)?;
    if !obj.parts.total.is_finite() {
        return Err(GanError::NonFiniteLoss {
            iter,
            detail: format!("generator loss {:?}; fake DFN mean {}", obj.parts, obj.dfn_fake_mean),
        });
    }
    let mut gen_params = state.gen_params.clone();
    let (mut gen_m, mut gen_v) = (state.gen_m.clone(), state.gen_v.clone());
    cfg.optimizer.step(&mut gen_params, &mut gen_m, &mut gen_v, &obj.grad, iter);
    if gen_params.iter().chain(&disc_params).any(|v| !v.is_finite()) {
        return Err(GanError::NonFiniteLoss {
            iter,
            detail: "parameters became non-finite".into(),
        });
    }

    let mut lambda_p = state.lambda_p;
    if let PenaltyMode::Lagrangian { eta } = cfg.penalty_mode {
        lambda_p += eta * (obj.parts.gap.abs() - epsilon).max(0.0);
    }

    state.gen_params = gen_params;
    state.disc_params = disc_params;
    state.gen_m = gen_m;
    state.gen_v = gen_v;
    state.disc_m = disc_m;
    state.disc_v = disc_v;
    state.iter = iter;
    state.dfn_real_ema = Some(ema);
    state.epsilon = Some(epsilon);
    state.lambda_p = lambda_p;

    Ok(StepReport {
        iter,
        d_loss: dl,
        g: obj.parts,
        dfn_fake_mean: obj.dfn_fake_mean,
        dfn_real_batch,
        dfn_real_ema: ema,
        epsilon,
        lambda_p,
        skipped_dfn_grads: obj.skipped_dfn_grads,
        checkpoint_due: iter % cfg.checkpoint_every == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn tiny_config() -> GanConfig {
        GanConfig {
            latent_dim: 6,
            n: 16,
            gen_channels: 8,
            disc_channels: 2,
            batch_size: 3,
            seed: 9,
            ..GanConfig::default()
        }
    }

    fn real_batch(rng: &mut impl Rng, n: usize, side: usize) -> Tensor4 {
        let data = (0..n * side * side).map(|_| rng.gen_range(-0.9..0.9)).collect();
        Tensor4::new((n, 1, side, side), data).unwrap()
    }

    #[test]
    fn tiny_network_fits_the_gradient_budget() {
        let model = GanModel::image(&tiny_config()).unwrap();
        assert!(model.generator.param_count() <= 2000, "{}", model.generator.param_count());
        assert_eq!(model.generator.output_shape(), (1, 16, 16));
    }

    #[test]
    fn generator_gradient_with_penalty_matches_fd() {
        let cfg = tiny_config();
        let model = GanModel::image(&cfg).unwrap();
        let mut state = TrainState::new(&model, &cfg, 0);
        // Larger weights so tanh outputs are far from zero and the spectrum
        // of each sample is well separated.
        let gp: Vec<f64> = state.gen_params_f64().iter().map(|v| v * 20.0).collect();
        let dp: Vec<f64> = state.disc_params_f64().iter().map(|v| v * 20.0).collect();
        let z = state.sample_latent(cfg.batch_size, cfg.latent_dim);
        let (eps, lambda) = (0.05, 0.7);
        let obj = generator_objective(&model, &cfg, &gp, &dp, &z, 0.0, eps, lambda).unwrap();
        assert!(obj.parts.penalty > 0.0);
        assert_eq!(obj.skipped_dfn_grads, 0);

        let value = |p: &[f64]| generator_objective(&model, &cfg, p, &dp, &z, 0.0, eps, lambda).unwrap().parts.total;
        let h = 1e-6;
        let mut fd = vec![0.0; gp.len()];
        for i in 0..gp.len() {
            let mut p = gp.clone();
            p[i] += h;
            let up = value(&p);
            p[i] -= 2.0 * h;
            fd[i] = (up - value(&p)) / (2.0 * h);
        }
        let num: f64 = fd.iter().zip(&obj.grad).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(num / den <= 1e-3, "relative error {}", num / den);
    }

    #[test]
    fn zero_lr_only_advances_iter() {
        let mut cfg = tiny_config();
        cfg.optimizer.lr = 0.0;
        let model = GanModel::image(&cfg).unwrap();
        let mut state = TrainState::new(&model, &cfg, 0);
        let before = state.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let real = real_batch(&mut rng, 3, 16);
        let z = state.sample_latent(3, cfg.latent_dim);
        let rep = train_step(&model, &cfg, &mut state, &real, &z).unwrap();
        assert_eq!(rep.iter, 1);
        assert_eq!(state.iter, 1);
        assert_eq!(state.gen_params, before.gen_params);
        assert_eq!(state.disc_params, before.disc_params);
        assert_eq!(state.dfn_real_ema, Some(rep.dfn_real_batch));
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = tiny_config();
        let model = GanModel::image(&cfg).unwrap();
        let run = || {
            let mut state = TrainState::new(&model, &cfg, 7);
            let mut data_rng = ChaCha8Rng::seed_from_u64(2);
            for _ in 0..3 {
                let real = real_batch(&mut data_rng, 3, 16);
                let z = state.sample_latent(3, cfg.latent_dim);
                train_step(&model, &cfg, &mut state, &real, &z).unwrap();
            }
            state
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.iter, 3);
    }

    #[test]
    fn lagrangian_weight_grows_outside_band() {
        let mut cfg = tiny_config();
        cfg.epsilon = Some(0.0);
        cfg.penalty_mode = PenaltyMode::Lagrangian { eta: 0.5 };
        let model = GanModel::image(&cfg).unwrap();
        let mut state = TrainState::new(&model, &cfg, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let real = real_batch(&mut rng, 3, 16);
        let z = state.sample_latent(3, cfg.latent_dim);
        let rep = train_step(&model, &cfg, &mut state, &real, &z).unwrap();
        let want = 1.0 + 0.5 * rep.g.gap.abs();
        assert!((state.lambda_p - want).abs() < 1e-12);
    }

    #[test]
    fn point_pairs_view() {
        let x = Tensor4::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0], vec![5.0, 5.0]]).unwrap();
        let ms = batch_dfn(DfnView::PointPairs, &x).unwrap();
        assert_eq!(ms.len(), 1);
        assert!((dfn(&ms[0]).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(GanConfig::default().validate().is_ok());
        assert!(GanConfig { n: 24, ..GanConfig::default() }.validate().is_err());
        assert!(GanConfig { epsilon: Some(-1.0), ..GanConfig::default() }.validate().is_err());
        assert!(GanConfig { checkpoint_every: 0, ..GanConfig::default() }.validate().is_err());
        let m = GanConfig::lsgan_m110();
        assert_eq!((m.a, m.b, m.c), (-1.0, 1.0, 0.0));
    }
}

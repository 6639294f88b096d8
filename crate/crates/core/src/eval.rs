//! Fréchet distance over a frozen random convolutional embedding, and
//! Gaussian-mixture mode counting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::gan::{GanError, LayerSpec, Network, Tensor4};
use crate::linalg::{matrix_sqrt_psd, LinalgError, Matrix};

/// Embedding width.
pub const FEATURE_DIM: usize = 64;
const JACOBI_SWEEPS: usize = 100;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid mixture: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Gan(#[from] GanError),
}

fn embedding_network(channels: usize, h: usize, w: usize) -> Result<Network, GanError> {
    let conv = |out_ch| LayerSpec::Conv {
        out_ch,
        kernel: 3,
        stride: 2,
        pad: 1,
    };
    Network::new(
        (channels, h, w),
        vec![conv(16), LayerSpec::Relu, conv(32), LayerSpec::Relu, conv(FEATURE_DIM), LayerSpec::Relu],
    )
}

/// He-initialized weights, zero biases.
fn embedding_params(net: &Network, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0; net.param_count()];
    let mut shape = net.input_shape();
    for (layer, (start, len)) in net.layers().iter().zip(net.layer_params()) {
        if let LayerSpec::Conv { out_ch, kernel, .. } = *layer {
            let fan_in = (shape.0 * kernel * kernel) as f64;
            let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("valid std");
            let n_w = len - out_ch;
            for v in &mut params[start..start + n_w] {
                *v = normal.sample(&mut rng);
            }
        }
        shape = layer.output_shape(shape).expect("validated network");
    }
    params
}

/// Frozen seeded three-layer conv stack with global average pooling;
/// returns `batch × 64`.
pub fn feature_embed(batch: &Tensor4, seed: u64) -> Result<Matrix, EvalError> {
    let net = embedding_network(batch.c, batch.h, batch.w)?;
    let params = embedding_params(&net, seed);
    let out = net.apply(&params, batch)?;
    let plane = out.h * out.w;
    Ok(Matrix::from_fn(batch.n, FEATURE_DIM, |i, k| {
        let s = out.sample(i);
        s[k * plane..(k + 1) * plane].iter().sum::<f64>() / plane as f64
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub cov: Matrix,
    pub count: usize,
}

/// Sample mean and unbiased, symmetrized covariance of the rows.
pub fn gaussian_stats(features: &Matrix) -> Result<FeatureStats, EvalError> {
    let (n, d) = (features.rows(), features.cols());
    if n < 2 {
        return Err(EvalError::InsufficientSamples { needed: 2, got: n });
    }
    let mean: Vec<f64> = (0..d)
        .map(|k| (0..n).map(|i| features[(i, k)]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let row = features.row(i);
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(FeatureStats { mean, cov, count: n })
}

/// `‖μr − μg‖² + tr(Σr + Σg − 2·(Σr^½ Σg Σr^½)^½)`, clamped at zero.
pub fn frechet_distance(r: &FeatureStats, g: &FeatureStats) -> Result<f64, EvalError> {
    if r.mean.len() != g.mean.len() || r.cov.rows() != g.cov.rows() || r.cov.rows() != r.mean.len() {
        return Err(EvalError::DimensionMismatch(format!(
            "{} vs {} features",
            r.mean.len(),
            g.mean.len()
        )));
    }
    if r.mean == g.mean && r.cov == g.cov {
        return Ok(0.0);
    }
    let mean_term: f64 = r.mean.iter().zip(&g.mean).map(|(a, b)| (a - b) * (a - b)).sum();
    let sr = matrix_sqrt_psd(&r.cov.symmetrized(), JACOBI_SWEEPS)?;
    let inner = sr.matmul(&g.cov)?.matmul(&sr)?.symmetrized();
    let cross = matrix_sqrt_psd(&inner, JACOBI_SWEEPS)?;
    let value = mean_term + r.cov.trace() + g.cov.trace() - 2.0 * cross.trace();
    Ok(value.max(0.0))
}

/// Isotropic Gaussian mixture in the plane with uniform weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmSpec {
    pub centers: Vec<[f64; 2]>,
    pub sigma: f64,
}

impl GmmSpec {
    pub const MODES: usize = 10;

    pub fn new(centers: Vec<[f64; 2]>, sigma: f64) -> Result<Self, EvalError> {
        if centers.len() != Self::MODES {
            return Err(EvalError::InvalidSpec(format!("{} centers, need 10", centers.len())));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(EvalError::InvalidSpec("sigma must be positive".into()));
        }
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                if dist(centers[i], centers[j]) <= 6.0 * sigma {
                    return Err(EvalError::InvalidSpec(format!("centers {i} and {j} closer than 6σ")));
                }
            }
        }
        Ok(Self { centers, sigma })
    }

    /// Ten centers evenly spaced on a circle.
    pub fn ring(radius: f64, sigma: f64) -> Result<Self, EvalError> {
        let centers = (0..Self::MODES)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / Self::MODES as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Self::new(centers, sigma)
    }
}

impl Default for GmmSpec {
    fn default() -> Self {
        Self::ring(2.0, 0.05).expect("default ring is separable")
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn gmm_sample(spec: &GmmSpec, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gmm_sample_with(spec, n, &mut rng)
}

pub fn gmm_sample_with(spec: &GmmSpec, n: usize, rng: &mut impl Rng) -> Vec<[f64; 2]> {
    let noise = Normal::new(0.0, spec.sigma).expect("positive sigma");
    (0..n)
        .map(|_| {
            let c = spec.centers[rng.gen_range(0..spec.centers.len())];
            [c[0] + noise.sample(rng), c[1] + noise.sample(rng)]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeCount {
    pub detected: usize,
    pub per_mode: Vec<usize>,
}

/// A sample belongs to its nearest center when within
/// `capture_radius_mult·σ`; a mode is detected when it holds at least one
/// sample and at least `min_fraction` of all samples.
pub fn count_modes(samples: &[[f64; 2]], spec: &GmmSpec, capture_radius_mult: f64, min_fraction: f64) -> ModeCount {
    let radius = capture_radius_mult * spec.sigma;
    let mut per_mode = vec![0usize; spec.centers.len()];
    for &p in samples {
        let (k, d) = spec
            .centers
            .iter()
            .enumerate()
            .map(|(k, &c)| (k, dist(p, c)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("ten centers");
        if d <= radius {
            per_mode[k] += 1;
        }
    }
    let threshold = min_fraction * samples.len() as f64;
    let detected = per_mode.iter().filter(|&&c| c > 0 && c as f64 >= threshold).count();
    ModeCount { detected, per_mode }
}

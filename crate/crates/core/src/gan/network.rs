use rand::Rng;

use super::layers::{BnCache, Shape};
use super::{GanError, LayerSpec, Tensor4};

/// A feed-forward stack over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input: Shape,
    layers: Vec<LayerSpec>,
    shapes: Vec<Shape>,
    offsets: Vec<usize>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    acts: Vec<Tensor4>,
    bn: Vec<Option<BnCache>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor4 {
        self.acts.last().expect("at least the input")
    }
}

impl Network {
    pub fn new(input: Shape, layers: Vec<LayerSpec>) -> Result<Self, GanError> {
        let mut shapes = vec![input];
        let mut offsets = vec![0];
        for layer in &layers {
            let cur = *shapes.last().expect("non-empty");
            shapes.push(layer.output_shape(cur)?);
            offsets.push(offsets.last().expect("non-empty") + layer.param_count(cur));
        }
        Ok(Self {
            input,
            layers,
            shapes,
            offsets,
        })
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn output_shape(&self) -> Shape {
        *self.shapes.last().expect("non-empty")
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        *self.offsets.last().expect("non-empty")
    }

    /// `(start, len)` of each layer's parameters.
    pub fn layer_params(&self) -> Vec<(usize, usize)> {
        self.offsets.windows(2).map(|w| (w[0], w[1] - w[0])).collect()
    }

    pub fn init_params(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        for (i, layer) in self.layers.iter().enumerate() {
            layer.init(self.shapes[i], rng, &mut params[self.offsets[i]..self.offsets[i + 1]]);
        }
        params
    }

    fn check(&self, params: &[f64], x: &Tensor4) -> Result<(), GanError> {
        if params.len() != self.param_count() {
            return Err(GanError::ShapeMismatch(format!(
                "{} parameters, network needs {}",
                params.len(),
                self.param_count()
            )));
        }
        let (c, h, w) = self.input;
        if x.n == 0 {
            return Err(GanError::EmptyBatch);
        }
        if (x.c, x.h, x.w) != (c, h, w) {
            return Err(GanError::ShapeMismatch(format!(
                "input {:?}, network expects (_, {c}, {h}, {w})",
                x.dims()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, params: &[f64], x: &Tensor4) -> Result<ForwardCache, GanError> {
        self.check(params, x)?;
        let mut acts = vec![x.clone()];
        let mut bn = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let p = &params[self.offsets[i]..self.offsets[i + 1]];
            let (y, cache) = layer.forward(self.shapes[i], p, &acts[i]);
            acts.push(y);
            bn.push(cache);
        }
        Ok(ForwardCache { acts, bn })
    }

    /// Output only.
    pub fn apply(&self, params: &[f64], x: &Tensor4) -> Result<Tensor4, GanError> {
        let mut cache = self.forward(params, x)?;
        Ok(cache.acts.pop().expect("output"))
    }

    /// Gradients of a scalar objective whose gradient with respect to the
    /// output is `grad_out`. Returns `(grad_params, grad_input)`.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &ForwardCache,
        grad_out: &Tensor4,
    ) -> Result<(Vec<f64>, Tensor4), GanError> {
        if grad_out.dims() != cache.output().dims() {
            return Err(GanError::ShapeMismatch(format!(
                "output gradient {:?} vs output {:?}",
                grad_out.dims(),
                cache.output().dims()
            )));
        }
        let mut grad = vec![0.0; self.param_count()];
        let mut g = grad_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let p = &params[self.offsets[i]..self.offsets[i + 1]];
            let (gp, gx) = layer.backward(self.shapes[i], p, &cache.acts[i], &cache.acts[i + 1], cache.bn[i].as_ref(), &g);
            grad[self.offsets[i]..self.offsets[i + 1]].copy_from_slice(&gp);
            g = gx;
        }
        if grad.iter().any(|v| !v.is_finite()) || !g.is_finite() {
            return Err(GanError::NonFiniteGradient("network backward"));
        }
        Ok((grad, g))
    }
}

/// Generator for `n × n` single-channel output: dense projection to a 4×4
/// seed map with ReLU, `log2(n) − 2` stride-2 transposed 3×3 convolutions
/// (batch norm + ReLU on all but the last), then tanh. Channels halve at
/// every stage starting from `base_channels`.
pub fn generator_layers(latent_dim: usize, n: usize, base_channels: usize) -> Result<Network, GanError> {
    if n < 8 || !n.is_power_of_two() {
        return Err(GanError::InvalidConfig(format!("side {n} must be a power of two ≥ 8")));
    }
    let stages = n.trailing_zeros() as usize - 2;
    let mut layers = vec![
        LayerSpec::Dense {
            out_c: base_channels,
            out_h: 4,
            out_w: 4,
        },
        LayerSpec::Relu,
    ];
    let mut ch = base_channels;
    for stage in 0..stages {
        let last = stage + 1 == stages;
        let out_ch = if last { 1 } else { (ch / 2).max(1) };
        layers.push(LayerSpec::TransposedConv {
            out_ch,
            kernel: 3,
            stride: 2,
            pad: 1,
            output_pad: 1,
        });
        if last {
            layers.push(LayerSpec::Tanh);
        } else {
            layers.push(LayerSpec::BatchNorm);
            layers.push(LayerSpec::Relu);
        }
        ch = out_ch;
    }
    Network::new((latent_dim, 1, 1), layers)
}

/// Discriminator for `n × n` input: stride-2 5×5 convolutions with leaky
/// ReLU (channels doubling from `base_channels`) down to a 4×4 map, then a
/// dense layer to one unbounded score.
pub fn discriminator_layers(n: usize, base_channels: usize) -> Result<Network, GanError> {
    if n < 8 || !n.is_power_of_two() {
        return Err(GanError::InvalidConfig(format!("side {n} must be a power of two ≥ 8")));
    }
    let stages = n.trailing_zeros() as usize - 2;
    let mut layers = Vec::new();
    let mut ch = base_channels;
    for _ in 0..stages {
        layers.push(LayerSpec::Conv {
            out_ch: ch,
            kernel: 5,
            stride: 2,
            pad: 2,
        });
        layers.push(LayerSpec::LeakyRelu { slope: 0.2 });
        ch *= 2;
    }
    layers.push(LayerSpec::Dense {
        out_c: 1,
        out_h: 1,
        out_w: 1,
    });
    Network::new((1, n, n), layers)
}

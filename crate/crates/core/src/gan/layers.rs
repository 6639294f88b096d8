use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{GanError, Tensor4};

const BN_EPS: f64 = 1e-5;
const INIT_STD: f64 = 0.02;

/// `(channels, height, width)` of one sample.
pub type Shape = (usize, usize, usize);

/// One layer of a feed-forward stack. Input channel counts come from the
/// previous layer's output shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    /// Fully connected, output reshaped to `(out_c, out_h, out_w)`.
    Dense { out_c: usize, out_h: usize, out_w: usize },
    Conv { out_ch: usize, kernel: usize, stride: usize, pad: usize },
    TransposedConv { out_ch: usize, kernel: usize, stride: usize, pad: usize, output_pad: usize },
    /// Per-channel normalization with batch statistics.
    BatchNorm,
    Relu,
    LeakyRelu { slope: f64 },
    Tanh,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::TransposedConv { .. } => "transposed_conv",
            LayerSpec::BatchNorm => "batch_norm",
            LayerSpec::Relu => "relu",
            LayerSpec::LeakyRelu { .. } => "leaky_relu",
            LayerSpec::Tanh => "tanh",
        }
    }

    pub fn output_shape(&self, (c, h, w): Shape) -> Result<Shape, GanError> {
        let bad = |msg: String| Err(GanError::ShapeMismatch(format!("{}: {msg}", self.name())));
        match *self {
            LayerSpec::Dense { out_c, out_h, out_w } => {
                if out_c * out_h * out_w == 0 {
                    return bad("empty output".into());
                }
                Ok((out_c, out_h, out_w))
            }
            LayerSpec::Conv { out_ch, kernel, stride, pad } => {
                if kernel == 0 || stride == 0 || out_ch == 0 {
                    return bad("kernel, stride and channels must be positive".into());
                }
                if h + 2 * pad < kernel || w + 2 * pad < kernel {
                    return bad(format!("kernel {kernel} larger than padded {h}x{w}"));
                }
                Ok((out_ch, (h + 2 * pad - kernel) / stride + 1, (w + 2 * pad - kernel) / stride + 1))
            }
            LayerSpec::TransposedConv { out_ch, kernel, stride, pad, output_pad } => {
                if kernel == 0 || stride == 0 || out_ch == 0 {
                    return bad("kernel, stride and channels must be positive".into());
                }
                let size = |n: usize| ((n - 1) * stride + kernel + output_pad).checked_sub(2 * pad);
                match (size(h), size(w)) {
                    (Some(oh), Some(ow)) if oh > 0 && ow > 0 && h > 0 && w > 0 => Ok((out_ch, oh, ow)),
                    _ => bad(format!("padding {pad} too large for {h}x{w}")),
                }
            }
            LayerSpec::LeakyRelu { slope } if !slope.is_finite() => bad("slope must be finite".into()),
            _ => Ok((c, h, w)),
        }
    }

    pub fn param_count(&self, input: Shape) -> usize {
        let (c, h, w) = input;
        match *self {
            LayerSpec::Dense { out_c, out_h, out_w } => {
                let out = out_c * out_h * out_w;
                out * c * h * w + out
            }
            LayerSpec::Conv { out_ch, kernel, .. } | LayerSpec::TransposedConv { out_ch, kernel, .. } => {
                out_ch * c * kernel * kernel + out_ch
            }
            LayerSpec::BatchNorm => 2 * c,
            _ => 0,
        }
    }

    /// Gaussian weights, zero biases, unit BN scale.
    pub(crate) fn init(&self, input: Shape, rng: &mut impl Rng, out: &mut [f64]) {
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        match *self {
            LayerSpec::Dense { .. } | LayerSpec::Conv { .. } | LayerSpec::TransposedConv { .. } => {
                let bias = self.bias_len(input);
                let n_w = out.len() - bias;
                for v in &mut out[..n_w] {
                    *v = normal.sample(rng);
                }
                out[n_w..].fill(0.0);
            }
            LayerSpec::BatchNorm => {
                out[..input.0].fill(1.0);
                out[input.0..].fill(0.0);
            }
            _ => {}
        }
    }

    fn bias_len(&self, input: Shape) -> usize {
        match *self {
            LayerSpec::Dense { out_c, out_h, out_w } => out_c * out_h * out_w,
            LayerSpec::Conv { out_ch, .. } | LayerSpec::TransposedConv { out_ch, .. } => out_ch,
            LayerSpec::BatchNorm => input.0,
            _ => 0,
        }
    }

    pub(crate) fn forward(&self, input: Shape, params: &[f64], x: &Tensor4) -> (Tensor4, Option<BnCache>) {
        let out_shape = self.output_shape(input).expect("validated network");
        let (oc, oh, ow) = out_shape;
        let n = x.n;
        let out_len = oc * oh * ow;
        let mut y = Tensor4::zeros((n, oc, oh, ow));
        let mut cache = None;
        match *self {
            LayerSpec::Dense { .. } => {
                let in_len = x.sample_len();
                let (wts, bias) = params.split_at(out_len * in_len);
                y.data.par_chunks_mut(out_len).enumerate().for_each(|(s, ys)| {
                    let xs = x.sample(s);
                    for (o, yo) in ys.iter_mut().enumerate() {
                        let row = &wts[o * in_len..(o + 1) * in_len];
                        *yo = bias[o] + row.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                    }
                });
            }
            LayerSpec::Conv { kernel, stride, pad, .. } => {
                y.data.par_chunks_mut(out_len).enumerate().for_each(|(s, ys)| {
                    conv_forward(x.sample(s), input, params, out_shape, kernel, stride, pad, ys)
                });
            }
            LayerSpec::TransposedConv { kernel, stride, pad, .. } => {
                y.data.par_chunks_mut(out_len).enumerate().for_each(|(s, ys)| {
                    tconv_forward(x.sample(s), input, params, out_shape, kernel, stride, pad, ys)
                });
            }
            LayerSpec::BatchNorm => {
                let (c, h, w) = input;
                let plane = h * w;
                let m = (n * plane) as f64;
                let mut xhat = vec![0.0; x.data.len()];
                let mut inv_std = vec![0.0; c];
                for ch in 0..c {
                    let idx = |s: usize| (s * c + ch) * plane..(s * c + ch + 1) * plane;
                    let mean = (0..n).map(|s| x.data[idx(s)].iter().sum::<f64>()).sum::<f64>() / m;
                    let var = (0..n)
                        .map(|s| x.data[idx(s)].iter().map(|v| (v - mean) * (v - mean)).sum::<f64>())
                        .sum::<f64>()
                        / m;
                    let inv = 1.0 / (var + BN_EPS).sqrt();
                    inv_std[ch] = inv;
                    let (gamma, beta) = (params[ch], params[c + ch]);
                    for s in 0..n {
                        for i in idx(s) {
                            let xh = (x.data[i] - mean) * inv;
                            xhat[i] = xh;
                            y.data[i] = gamma * xh + beta;
                        }
                    }
                }
                cache = Some(BnCache { xhat, inv_std });
            }
            LayerSpec::Relu => {
                for (o, &v) in y.data.iter_mut().zip(&x.data) {
                    *o = v.max(0.0);
                }
            }
            LayerSpec::LeakyRelu { slope } => {
                for (o, &v) in y.data.iter_mut().zip(&x.data) {
                    *o = if v > 0.0 { v } else { slope * v };
                }
            }
            LayerSpec::Tanh => {
                for (o, &v) in y.data.iter_mut().zip(&x.data) {
                    *o = v.tanh();
                }
            }
        }
        (y, cache)
    }

    /// Returns `(grad_params, grad_input)`.
    pub(crate) fn backward(
        &self,
        input: Shape,
        params: &[f64],
        x: &Tensor4,
        y: &Tensor4,
        bn: Option<&BnCache>,
        gy: &Tensor4,
    ) -> (Vec<f64>, Tensor4) {
        let out_shape = self.output_shape(input).expect("validated network");
        let n = x.n;
        let in_len = x.sample_len();
        let mut gx = Tensor4::zeros(x.dims());
        let mut gp = vec![0.0; self.param_count(input)];
        match *self {
            LayerSpec::Dense { .. } => {
                let out_len = gy.sample_len();
                let (wts, _) = params.split_at(out_len * in_len);
                gx.data.par_chunks_mut(in_len).enumerate().for_each(|(s, gxs)| {
                    for (o, &g) in gy.sample(s).iter().enumerate() {
                        let row = &wts[o * in_len..(o + 1) * in_len];
                        for (d, &wv) in gxs.iter_mut().zip(row) {
                            *d += wv * g;
                        }
                    }
                });
                let partials: Vec<Vec<f64>> = (0..n)
                    .into_par_iter()
                    .map(|s| {
                        let mut part = vec![0.0; gp.len()];
                        let (xs, gs) = (x.sample(s), gy.sample(s));
                        for (o, &g) in gs.iter().enumerate() {
                            let row = &mut part[o * in_len..(o + 1) * in_len];
                            for (d, &xv) in row.iter_mut().zip(xs) {
                                *d += g * xv;
                            }
                        }
                        part[out_len * in_len..].copy_from_slice(gs);
                        part
                    })
                    .collect();
                sum_into(&mut gp, &partials);
            }
            LayerSpec::Conv { kernel, stride, pad, .. } | LayerSpec::TransposedConv { kernel, stride, pad, .. } => {
                let transposed = matches!(self, LayerSpec::TransposedConv { .. });
                let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
                    .into_par_iter()
                    .map(|s| {
                        let mut part = vec![0.0; gp.len()];
                        let mut gxs = vec![0.0; in_len];
                        if transposed {
                            tconv_backward(
                                x.sample(s), input, params, out_shape, kernel, stride, pad, gy.sample(s), &mut part,
                                &mut gxs,
                            );
                        } else {
                            conv_backward(
                                x.sample(s), input, params, out_shape, kernel, stride, pad, gy.sample(s), &mut part,
                                &mut gxs,
                            );
                        }
                        (part, gxs)
                    })
                    .collect();
                for (s, (part, gxs)) in partials.iter().enumerate() {
                    for (d, v) in gp.iter_mut().zip(part) {
                        *d += v;
                    }
                    gx.sample_mut(s).copy_from_slice(gxs);
                }
            }
            LayerSpec::BatchNorm => {
                let bn = bn.expect("batch norm cache");
                let (c, h, w) = input;
                let plane = h * w;
                let m = (n * plane) as f64;
                for ch in 0..c {
                    let idx = |s: usize| (s * c + ch) * plane..(s * c + ch + 1) * plane;
                    let (mut sum_g, mut sum_gx) = (0.0, 0.0);
                    for s in 0..n {
                        for i in idx(s) {
                            sum_g += gy.data[i];
                            sum_gx += gy.data[i] * bn.xhat[i];
                        }
                    }
                    gp[ch] = sum_gx;
                    gp[c + ch] = sum_g;
                    let k = params[ch] * bn.inv_std[ch] / m;
                    for s in 0..n {
                        for i in idx(s) {
                            gx.data[i] = k * (m * gy.data[i] - sum_g - bn.xhat[i] * sum_gx);
                        }
                    }
                }
            }
            LayerSpec::Relu => {
                for ((d, &g), &v) in gx.data.iter_mut().zip(&gy.data).zip(&x.data) {
                    *d = if v > 0.0 { g } else { 0.0 };
                }
            }
            LayerSpec::LeakyRelu { slope } => {
                for ((d, &g), &v) in gx.data.iter_mut().zip(&gy.data).zip(&x.data) {
                    *d = if v > 0.0 { g } else { slope * g };
                }
            }
            LayerSpec::Tanh => {
                for ((d, &g), &t) in gx.data.iter_mut().zip(&gy.data).zip(&y.data) {
                    *d = g * (1.0 - t * t);
                }
            }
        }
        (gp, gx)
    }
}

fn sum_into(acc: &mut [f64], parts: &[Vec<f64>]) {
    for part in parts {
        for (d, v) in acc.iter_mut().zip(part) {
            *d += v;
        }
    }
}

/// Indices `a < n_a` with `a·stride + offset ∈ [0, n_b)`.
fn span(n_a: usize, n_b: usize, stride: usize, offset: isize) -> Range<usize> {
    let s = stride as isize;
    let lo = if offset >= 0 { 0 } else { (-offset + s - 1) / s };
    let hi_excl = (n_b as isize - 1 - offset).div_euclid(s) + 1;
    let hi = hi_excl.clamp(0, n_a as isize);
    (lo as usize).min(hi as usize)..hi as usize
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &[f64],
    (ic, ih, iw): Shape,
    params: &[f64],
    (oc, oh, ow): Shape,
    k: usize,
    s: usize,
    p: usize,
    y: &mut [f64],
) {
    let (wts, bias) = params.split_at(oc * ic * k * k);
    for o in 0..oc {
        let plane = &mut y[o * oh * ow..(o + 1) * oh * ow];
        plane.fill(bias[o]);
        for i in 0..ic {
            let xin = &x[i * ih * iw..(i + 1) * ih * iw];
            for ky in 0..k {
                let rows = span(oh, ih, s, ky as isize - p as isize);
                for kx in 0..k {
                    let wv = wts[((o * ic + i) * k + ky) * k + kx];
                    let cols = span(ow, iw, s, kx as isize - p as isize);
                    for oy in rows.clone() {
                        let iy = oy * s + ky - p;
                        let xrow = &xin[iy * iw..(iy + 1) * iw];
                        let yrow = &mut plane[oy * ow..(oy + 1) * ow];
                        for ox in cols.clone() {
                            yrow[ox] += wv * xrow[ox * s + kx - p];
                        }
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    (ic, ih, iw): Shape,
    params: &[f64],
    (oc, oh, ow): Shape,
    k: usize,
    s: usize,
    p: usize,
    gy: &[f64],
    gp: &mut [f64],
    gx: &mut [f64],
) {
    let n_w = oc * ic * k * k;
    let wts = &params[..n_w];
    for o in 0..oc {
        let gplane = &gy[o * oh * ow..(o + 1) * oh * ow];
        gp[n_w + o] += gplane.iter().sum::<f64>();
        for i in 0..ic {
            let xin = &x[i * ih * iw..(i + 1) * ih * iw];
            let gxin = &mut gx[i * ih * iw..(i + 1) * ih * iw];
            for ky in 0..k {
                let rows = span(oh, ih, s, ky as isize - p as isize);
                for kx in 0..k {
                    let wi = ((o * ic + i) * k + ky) * k + kx;
                    let wv = wts[wi];
                    let cols = span(ow, iw, s, kx as isize - p as isize);
                    let mut gw = 0.0;
                    for oy in rows.clone() {
                        let iy = oy * s + ky - p;
                        let grow = &gplane[oy * ow..(oy + 1) * ow];
                        for ox in cols.clone() {
                            let ix = iy * iw + ox * s + kx - p;
                            gw += xin[ix] * grow[ox];
                            gxin[ix] += wv * grow[ox];
                        }
                    }
                    gp[wi] += gw;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn tconv_forward(
    x: &[f64],
    (ic, ih, iw): Shape,
    params: &[f64],
    (oc, oh, ow): Shape,
    k: usize,
    s: usize,
    p: usize,
    y: &mut [f64],
) {
    let (wts, bias) = params.split_at(ic * oc * k * k);
    for o in 0..oc {
        y[o * oh * ow..(o + 1) * oh * ow].fill(bias[o]);
    }
    for i in 0..ic {
        let xin = &x[i * ih * iw..(i + 1) * ih * iw];
        for o in 0..oc {
            let plane = &mut y[o * oh * ow..(o + 1) * oh * ow];
            for ky in 0..k {
                let rows = span(ih, oh, s, ky as isize - p as isize);
                for kx in 0..k {
                    let wv = wts[((i * oc + o) * k + ky) * k + kx];
                    let cols = span(iw, ow, s, kx as isize - p as isize);
                    for iy in rows.clone() {
                        let oy = iy * s + ky - p;
                        let xrow = &xin[iy * iw..(iy + 1) * iw];
                        let yrow = &mut plane[oy * ow..(oy + 1) * ow];
                        for ix in cols.clone() {
                            yrow[ix * s + kx - p] += wv * xrow[ix];
                        }
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn tconv_backward(
    x: &[f64],
    (ic, ih, iw): Shape,
    params: &[f64],
    (oc, oh, ow): Shape,
    k: usize,
    s: usize,
    p: usize,
    gy: &[f64],
    gp: &mut [f64],
    gx: &mut [f64],
) {
    let n_w = ic * oc * k * k;
    let wts = &params[..n_w];
    for o in 0..oc {
        gp[n_w + o] += gy[o * oh * ow..(o + 1) * oh * ow].iter().sum::<f64>();
    }
    for i in 0..ic {
        let xin = &x[i * ih * iw..(i + 1) * ih * iw];
        let gxin = &mut gx[i * ih * iw..(i + 1) * ih * iw];
        for o in 0..oc {
            let gplane = &gy[o * oh * ow..(o + 1) * oh * ow];
            for ky in 0..k {
                let rows = span(ih, oh, s, ky as isize - p as isize);
                for kx in 0..k {
                    let wi = ((i * oc + o) * k + ky) * k + kx;
                    let wv = wts[wi];
                    let cols = span(iw, ow, s, kx as isize - p as isize);
                    let mut gw = 0.0;
                    for iy in rows.clone() {
                        let oy = iy * s + ky - p;
                        let grow = &gplane[oy * ow..(oy + 1) * ow];
                        for ix in cols.clone() {
                            let g = grow[ix * s + kx - p];
                            gw += xin[iy * iw + ix] * g;
                            gxin[iy * iw + ix] += wv * g;
                        }
                    }
                    gp[wi] += gw;
                }
            }
        }
    }
}

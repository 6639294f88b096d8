//! Frame-wise continuous wavelet transform with the complex Morlet mother
//! function `ψ(t) = π^(−1/4)·exp(iω₀t)·exp(−t²/2)`.
//!
//! Each column holds the L1-normalized coefficient
//! `W(s, c) = (1/(s·fs)) Σ_τ x[τ]·conj(ψ((τ − c)/(s·fs)))` at a frame centre
//! `c`, one column per hop. Scales are log-spaced in centre frequency
//! `f = ω₀/(2πs)`, low to high.
//!
//! Inversion is a single weighted sum over scales. Within a frame each
//! scale is treated as a stationary component whose instantaneous
//! frequency is read off the ridge it belongs to (a Morlet ridge is an
//! exact parabola in `ln|W|` against scale), then neighbouring frames are
//! cross-faded.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Signal, SignalError};
use crate::linalg::Matrix;

/// Wavelet support in units of the scale (`exp(−5²/2) ≈ 4e-6`).
const SUPPORT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwtParams {
    pub frame_ms: f64,
    pub overlap: f64,
    pub n_scales: usize,
    pub omega0: f64,
    /// Lowest centre frequency, Hz.
    pub f_min: f64,
    /// Highest centre frequency as a fraction of Nyquist.
    pub f_max_fraction: f64,
}

impl Default for CwtParams {
    fn default() -> Self {
        Self {
            frame_ms: 50.0,
            overlap: 0.5,
            n_scales: 32,
            omega0: 6.0,
            f_min: 40.0,
            f_max_fraction: 0.95,
        }
    }
}

impl CwtParams {
    pub fn with_scales(n_scales: usize) -> Self {
        Self {
            n_scales,
            ..Self::default()
        }
    }

    /// `(frame, hop)` in samples.
    pub fn framing(&self, sample_rate: f64) -> (usize, usize) {
        let frame = (self.frame_ms * 1e-3 * sample_rate).round().max(1.0) as usize;
        let hop = ((frame as f64) * (1.0 - self.overlap)).round().max(1.0) as usize;
        (frame, hop)
    }

    pub fn scale_frequencies(&self, sample_rate: f64) -> Vec<f64> {
        let f_max = self.f_max_fraction * sample_rate / 2.0;
        let n = self.n_scales;
        if n == 1 {
            return vec![self.f_min];
        }
        let ratio = (f_max / self.f_min).ln() / (n - 1) as f64;
        (0..n).map(|k| self.f_min * (ratio * k as f64).exp()).collect()
    }

    pub fn validate(&self, sample_rate: f64) -> Result<(), SignalError> {
        let f_max = self.f_max_fraction * sample_rate / 2.0;
        if !(self.frame_ms > 0.0) {
            return Err(SignalError::InvalidParams("frame length must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(SignalError::InvalidParams("overlap must lie in [0, 1)".into()));
        }
        if self.n_scales < 2 {
            return Err(SignalError::InvalidParams("need at least two scales".into()));
        }
        if !(self.omega0 > 0.0) {
            return Err(SignalError::InvalidParams("omega0 must be positive".into()));
        }
        if !(self.f_min > 0.0 && self.f_min < f_max) {
            return Err(SignalError::InvalidParams(format!(
                "frequency band [{}, {f_max}] is empty",
                self.f_min
            )));
        }
        Ok(())
    }
}

/// Time/scale layout of a spectrogram, enough to place every column back
/// on the sample axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CwtGeometry {
    pub sample_rate: f64,
    /// Centre frequency of each row, Hz, ascending.
    pub scale_frequencies: Vec<f64>,
    /// Samples between consecutive columns.
    pub frame_hop: f64,
    /// Sample index of the first column's centre.
    pub first_center: f64,
    pub signal_len: usize,
    pub omega0: f64,
}

impl CwtGeometry {
    pub fn column_center(&self, j: usize) -> f64 {
        self.first_center + j as f64 * self.frame_hop
    }

    /// Same time span re-sampled onto `cols` columns.
    pub fn with_columns(&self, old_cols: usize, cols: usize) -> Self {
        let span = self.frame_hop * (old_cols.saturating_sub(1)) as f64;
        let frame_hop = if cols > 1 { span / (cols - 1) as f64 } else { 0.0 };
        Self {
            frame_hop,
            ..self.clone()
        }
    }

    /// Row frequencies re-sampled onto `rows` log-linear positions.
    pub fn with_rows(&self, rows: usize) -> Self {
        let old = &self.scale_frequencies;
        if old.len() == rows {
            return self.clone();
        }
        let freqs = (0..rows)
            .map(|i| {
                if rows == 1 || old.len() == 1 {
                    return old[0];
                }
                let pos = i as f64 * (old.len() - 1) as f64 / (rows - 1) as f64;
                let lo = (pos.floor() as usize).min(old.len() - 2);
                let a = pos - lo as f64;
                (old[lo].ln() * (1.0 - a) + old[lo + 1].ln() * a).exp()
            })
            .collect();
        Self {
            scale_frequencies: freqs,
            ..self.clone()
        }
    }
}

/// Magnitude/phase pair (rows = scales, columns = frames).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub magnitude: Matrix,
    pub phase: Matrix,
    pub geometry: CwtGeometry,
}

impl ComplexSpectrogram {
    pub fn scale_frequencies(&self) -> &[f64] {
        &self.geometry.scale_frequencies
    }

    pub fn frame_hop(&self) -> f64 {
        self.geometry.frame_hop
    }

    pub fn coefficient(&self, row: usize, col: usize) -> Complex64 {
        Complex64::from_polar(self.magnitude[(row, col)], self.phase[(row, col)])
    }
}

#[inline]
fn morlet_hat(xi: f64, omega0: f64) -> f64 {
    PI.powf(-0.25) * (2.0 * PI).sqrt() * (-(xi - omega0) * (xi - omega0) / 2.0).exp()
}

/// Conjugated, L1-normalized wavelet taps for one scale, indexed from
/// `-half` to `+half`.
fn wavelet_taps(scale_samples: f64, omega0: f64) -> (isize, Vec<Complex64>) {
    let half = (SUPPORT * scale_samples).ceil() as isize;
    let norm = PI.powf(-0.25) / scale_samples;
    let taps = (-half..=half)
        .map(|d| {
            let u = d as f64 / scale_samples;
            Complex64::from_polar(norm * (-u * u / 2.0).exp(), -omega0 * u)
        })
        .collect();
    (half, taps)
}

pub fn cwt_morlet(s: &Signal, params: &CwtParams) -> Result<ComplexSpectrogram, SignalError> {
    params.validate(s.sample_rate)?;
    let (frame, hop) = params.framing(s.sample_rate);
    if s.len() < frame {
        return Err(SignalError::SignalTooShort { len: s.len(), frame });
    }
    let n_frames = 1 + (s.len() - frame) / hop;
    let freqs = params.scale_frequencies(s.sample_rate);
    let first_center = frame / 2;
    let len = s.len() as isize;

    let mut magnitude = Matrix::zeros(freqs.len(), n_frames);
    let mut phase = Matrix::zeros(freqs.len(), n_frames);
    for (k, &f) in freqs.iter().enumerate() {
        let scale_samples = params.omega0 / (2.0 * PI * f) * s.sample_rate;
        let (half, taps) = wavelet_taps(scale_samples, params.omega0);
        for j in 0..n_frames {
            let c = (first_center + j * hop) as isize;
            let lo = (c - half).max(0);
            let hi = (c + half).min(len - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for t in lo..=hi {
                acc += taps[(t - c + half) as usize] * s.samples[t as usize];
            }
            magnitude[(k, j)] = acc.norm();
            phase[(k, j)] = if acc.norm() > 0.0 { acc.arg() } else { 0.0 };
        }
    }
    Ok(ComplexSpectrogram {
        magnitude,
        phase,
        geometry: CwtGeometry {
            sample_rate: s.sample_rate,
            scale_frequencies: freqs,
            frame_hop: hop as f64,
            first_center: first_center as f64,
            signal_len: s.len(),
            omega0: params.omega0,
        },
    })
}

/// Uniform synthesis weight for a log-spaced scale grid with ratio `r`
/// between neighbours: `2·ln r / ∫₀^∞ ψ̂(ξ)/ξ dξ`, so that the weighted
/// responses of all scales to an in-band tone sum to one.
pub fn morlet_synthesis_weight(scale_frequencies: &[f64], omega0: f64) -> f64 {
    let log_step = if scale_frequencies.len() > 1 {
        (scale_frequencies[scale_frequencies.len() - 1] / scale_frequencies[0]).ln()
            / (scale_frequencies.len() - 1) as f64
    } else {
        1.0
    };
    // Simpson's rule in ln ξ over the support of ψ̂.
    let lo = (omega0 - 10.0).max(1e-3).ln();
    let hi = (omega0 + 10.0).ln();
    let steps = 4000;
    let h = (hi - lo) / steps as f64;
    let mut integral = 0.0;
    for i in 0..=steps {
        let l = lo + i as f64 * h;
        let weight = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        integral += weight * morlet_hat(l.exp(), omega0);
    }
    integral *= h / 3.0;
    2.0 * log_step / integral
}

/// Instantaneous frequency assigned to each row of one column.
fn ridge_frequencies(column: &[f64], freqs: &[f64], omega0: f64) -> Vec<f64> {
    let n = column.len();
    let col_max = column.iter().fold(0.0f64, |a, &b| a.max(b));
    if col_max <= 0.0 {
        return freqs.to_vec();
    }
    let scale_of = |f: f64| omega0 / (2.0 * PI * f);

    // (frequency, log-amplitude at the ridge)
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for k in 0..n {
        let m = column[k];
        if m <= 1e-9 * col_max {
            continue;
        }
        let left_ok = k == 0 || m >= column[k - 1];
        let right_ok = k == n - 1 || m > column[k + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let mut peak = (freqs[k], m.ln());
        if k > 0 && k < n - 1 && column[k - 1] > 0.0 && column[k + 1] > 0.0 {
            let (u0, u1, u2) = (scale_of(freqs[k - 1]), scale_of(freqs[k]), scale_of(freqs[k + 1]));
            let (y0, y1, y2) = (column[k - 1].ln(), m.ln(), column[k + 1].ln());
            // Quadratic through three points in (u, ln|W|).
            let d01 = (y1 - y0) / (u1 - u0);
            let d12 = (y2 - y1) / (u2 - u1);
            let a = (d12 - d01) / (u2 - u0);
            if a < 0.0 {
                let b = d01 - a * (u0 + u1);
                let vertex = -b / (2.0 * a);
                let (u_hi, u_lo) = (u0.max(u2), u0.min(u2));
                if vertex > u_lo && vertex < u_hi {
                    let c = y1 - a * u1 * u1 - b * u1;
                    peak = (omega0 / (2.0 * PI * vertex), a * vertex * vertex + b * vertex + c);
                }
            }
        }
        peaks.push(peak);
    }
    if peaks.is_empty() {
        return freqs.to_vec();
    }
    freqs
        .iter()
        .map(|&f| {
            let u = scale_of(f);
            peaks
                .iter()
                .map(|&(fp, lp)| {
                    let d = 2.0 * PI * fp * u - omega0;
                    (fp, lp - d * d / 2.0)
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(fp, _)| fp)
                .unwrap_or(f)
        })
        .collect()
}

/// Reconstructs a signal from magnitudes and a phase reference laid out on
/// `geometry`.
pub fn invert_cwt(magnitude: &Matrix, phase: &Matrix, geometry: &CwtGeometry) -> Result<Signal, SignalError> {
    if magnitude.rows() != phase.rows() || magnitude.cols() != phase.cols() {
        return Err(SignalError::ShapeMismatch(format!(
            "magnitude {}x{} vs phase {}x{}",
            magnitude.rows(),
            magnitude.cols(),
            phase.rows(),
            phase.cols()
        )));
    }
    if magnitude.rows() != geometry.scale_frequencies.len() {
        return Err(SignalError::ShapeMismatch(format!(
            "{} rows but {} scale frequencies",
            magnitude.rows(),
            geometry.scale_frequencies.len()
        )));
    }
    let (rows, cols) = (magnitude.rows(), magnitude.cols());
    let mut out = vec![0.0; geometry.signal_len];
    if cols == 0 {
        return Signal::new(out, geometry.sample_rate);
    }
    let weight = morlet_synthesis_weight(&geometry.scale_frequencies, geometry.omega0);
    let fs = geometry.sample_rate;

    // Per column: active (amplitude, phase, angular rate per sample) terms.
    let components: Vec<Vec<(f64, f64, f64)>> = (0..cols)
        .map(|j| {
            let column: Vec<f64> = (0..rows).map(|k| magnitude[(k, j)]).collect();
            let inst = ridge_frequencies(&column, &geometry.scale_frequencies, geometry.omega0);
            (0..rows)
                .filter(|&k| column[k] > 0.0)
                .map(|k| (weight * column[k], phase[(k, j)], 2.0 * PI * inst[k] / fs))
                .collect()
        })
        .collect();

    let synth = |j: usize, t: f64| -> f64 {
        let dt = t - geometry.column_center(j);
        components[j].iter().map(|&(a, p, w)| a * (p + w * dt).cos()).sum()
    };

    for (t, slot) in out.iter_mut().enumerate() {
        let tf = t as f64;
        let pos = if geometry.frame_hop > 0.0 {
            (tf - geometry.first_center) / geometry.frame_hop
        } else {
            0.0
        };
        *slot = if pos <= 0.0 || cols == 1 {
            synth(0, tf)
        } else if pos >= (cols - 1) as f64 {
            synth(cols - 1, tf)
        } else {
            let j = pos.floor() as usize;
            let a = pos - j as f64;
            let w1 = (0.5 * PI * a).sin().powi(2);
            let mut v = 0.0;
            if w1 < 1.0 {
                v += (1.0 - w1) * synth(j, tf);
            }
            if w1 > 0.0 {
                v += w1 * synth(j + 1, tf);
            }
            v
        };
    }
    Signal::new(out, fs)
}

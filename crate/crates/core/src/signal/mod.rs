//! Audio ingestion, complex Morlet spectrograms and their inversion.

mod cwt;
mod resample;
mod spectrogram;
mod wav;

use thiserror::Error;

pub use cwt::{cwt_morlet, invert_cwt, morlet_synthesis_weight, ComplexSpectrogram, CwtGeometry, CwtParams};
pub use resample::{pitch_shift, resample};
pub use spectrogram::{magnitude_view, power, resize_bilinear, snr_db, Provenance, ScaleKind, Spectrogram};
pub use wav::{load_wav, write_wav_i16};

use crate::linalg::LinalgError;

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self, SignalError> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(SignalError::InvalidRate(sample_rate));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite);
        }
        Ok(Self { samples, sample_rate })
    }

    /// `amplitude·sin(2π·freq·t + phase)` for `duration` seconds.
    pub fn tone(freq: f64, amplitude: f64, phase: f64, duration: f64, sample_rate: f64) -> Self {
        let len = (duration * sample_rate).round() as usize;
        let w = 2.0 * std::f64::consts::PI * freq / sample_rate;
        let samples = (0..len).map(|i| amplitude * (w * i as f64 + phase).sin()).collect();
        Self { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("malformed wav: {0}")]
    MalformedWav(String),
    #[error("unsupported wav encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("sample rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error("signal has non-finite samples")]
    NonFinite,
    #[error("signal has {len} samples, shorter than one {frame}-sample frame")]
    SignalTooShort { len: usize, frame: usize },
    #[error("invalid transform parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty signal")]
    Empty,
    #[error("generated signal has zero power")]
    ZeroPowerGenerated,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

use std::fmt;
use std::str::FromStr;

use super::cwt::{ComplexSpectrogram, CwtGeometry};
use super::{Signal, SignalError};
use crate::linalg::Matrix;

/// Below this `|cos φ|` a logRe cell no longer pins down the magnitude.
const LOG_RE_COS_FLOOR: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScaleKind {
    Linear,
    Log,
    LogRe,
}

impl ScaleKind {
    pub const ALL: [ScaleKind; 3] = [ScaleKind::Linear, ScaleKind::Log, ScaleKind::LogRe];

    pub fn name(self) -> &'static str {
        match self {
            ScaleKind::Linear => "linear",
            ScaleKind::Log => "log",
            ScaleKind::LogRe => "logRe",
        }
    }
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScaleKind {
    type Err = SignalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(ScaleKind::Linear),
            "log" => Ok(ScaleKind::Log),
            "logre" | "log_re" | "log-re" => Ok(ScaleKind::LogRe),
            _ => Err(SignalError::InvalidParams(format!("unknown scale kind `{s}`"))),
        }
    }
}

/// Where a spectrogram came from and what is needed to turn it back into
/// audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: String,
    /// Phase of the source coefficients on the same grid as the data.
    pub phase: Matrix,
    pub geometry: CwtGeometry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub data: Matrix,
    pub scale_kind: ScaleKind,
    pub provenance: Provenance,
}

impl Spectrogram {
    /// Side length when square.
    pub fn side(&self) -> Option<usize> {
        (self.data.rows() == self.data.cols()).then_some(self.data.rows())
    }

    /// Linear magnitude implied by the data, given the stored phase.
    pub fn to_magnitude(&self) -> Matrix {
        match self.scale_kind {
            ScaleKind::Linear => self.data.map(|v| v.max(0.0)),
            ScaleKind::Log => self.data.map(|v| v.exp_m1().max(0.0)),
            ScaleKind::LogRe => {
                let phase = &self.provenance.phase;
                Matrix::from_fn(self.data.rows(), self.data.cols(), |i, j| {
                    let re = self.data[(i, j)].exp_m1().max(0.0);
                    re / phase[(i, j)].cos().abs().max(LOG_RE_COS_FLOOR)
                })
            }
        }
    }

    /// Inverts through the stored phase reference.
    pub fn to_signal(&self) -> Result<Signal, SignalError> {
        super::invert_cwt(&self.to_magnitude(), &self.provenance.phase, &self.provenance.geometry)
    }

    /// Same metadata, different data (e.g. a generated sample).
    pub fn with_data(&self, data: Matrix) -> Result<Self, SignalError> {
        if data.rows() != self.data.rows() || data.cols() != self.data.cols() {
            return Err(SignalError::ShapeMismatch(format!(
                "expected {}x{}, got {}x{}",
                self.data.rows(),
                self.data.cols(),
                data.rows(),
                data.cols()
            )));
        }
        Ok(Self {
            data,
            scale_kind: self.scale_kind,
            provenance: self.provenance.clone(),
        })
    }
}

pub fn magnitude_view(c: &ComplexSpectrogram, kind: ScaleKind, source: &str) -> Spectrogram {
    let data = match kind {
        ScaleKind::Linear => c.magnitude.clone(),
        ScaleKind::Log => c.magnitude.map(f64::ln_1p),
        ScaleKind::LogRe => Matrix::from_fn(c.magnitude.rows(), c.magnitude.cols(), |i, j| {
            (c.magnitude[(i, j)] * c.phase[(i, j)].cos()).abs().ln_1p()
        }),
    };
    Spectrogram {
        data,
        scale_kind: kind,
        provenance: Provenance {
            source: source.to_string(),
            phase: c.phase.clone(),
            geometry: c.geometry.clone(),
        },
    }
}

/// Corner-aligned bilinear resampling of `m` onto `rows × cols`.
pub(crate) fn bilinear(m: &Matrix, rows: usize, cols: usize) -> Matrix {
    let axis = |dst: usize, src: usize| -> Vec<(usize, usize, f64)> {
        (0..dst)
            .map(|i| {
                if src == 1 || dst == 1 {
                    return (0, 0, 0.0);
                }
                let pos = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
                let lo = (pos.floor() as usize).min(src - 2);
                (lo, lo + 1, pos - lo as f64)
            })
            .collect()
    };
    let ry = axis(rows, m.rows());
    let rx = axis(cols, m.cols());
    Matrix::from_fn(rows, cols, |i, j| {
        let (y0, y1, ay) = ry[i];
        let (x0, x1, ax) = rx[j];
        let top = m[(y0, x0)] * (1.0 - ax) + m[(y0, x1)] * ax;
        let bottom = m[(y1, x0)] * (1.0 - ax) + m[(y1, x1)] * ax;
        let v = top * (1.0 - ay) + bottom * ay;
        // Convex combination; clamp away round-off outside the corners.
        let lo = m[(y0, x0)].min(m[(y0, x1)]).min(m[(y1, x0)]).min(m[(y1, x1)]);
        let hi = m[(y0, x0)].max(m[(y0, x1)]).max(m[(y1, x0)]).max(m[(y1, x1)]);
        v.clamp(lo, hi)
    })
}

/// Resizes data and phase reference to `n × n`. Phase is interpolated on
/// the unit circle.
pub fn resize_bilinear(sp: &Spectrogram, n: usize) -> Spectrogram {
    assert!(n >= 2, "side must be at least 2");
    let data = bilinear(&sp.data, n, n);
    let phase = &sp.provenance.phase;
    let cos = bilinear(&phase.map(f64::cos), n, n);
    let sin = bilinear(&phase.map(f64::sin), n, n);
    let phase = Matrix::from_fn(n, n, |i, j| sin[(i, j)].atan2(cos[(i, j)]));
    let geometry = sp
        .provenance
        .geometry
        .with_rows(n)
        .with_columns(sp.data.cols(), n);
    Spectrogram {
        data,
        scale_kind: sp.scale_kind,
        provenance: Provenance {
            source: sp.provenance.source.clone(),
            phase,
            geometry,
        },
    }
}

pub fn power(s: &Signal) -> Result<f64, SignalError> {
    if s.is_empty() {
        return Err(SignalError::Empty);
    }
    Ok(s.samples.iter().map(|v| v * v).sum::<f64>() / s.len() as f64)
}

/// `20·log10(Pw(recon_real) / Pw(generated))`.
pub fn snr_db(recon_real: &Signal, generated: &Signal) -> Result<f64, SignalError> {
    let pr = power(recon_real)?;
    let pg = power(generated)?;
    if pg == 0.0 {
        return Err(SignalError::ZeroPowerGenerated);
    }
    Ok(20.0 * (pr / pg).log10())
}

//! Binary tensor artifacts: a self-describing little-endian header followed
//! by row-major `f32` data and an optional phase block of the same shape.
//!
//! Header layout:
//!
//! ```text
//! "DFNT" | version u16 | dtype u8 (1 = f32) | kind u8 | ndim u8 | dims u32*
//! sample_rate f64 | frame_hop f64 | first_center f64 | signal_len u64 | omega0 f64
//! n_freq u32 | scale_frequencies f64* | seed u64 | config_hash u64
//! source_len u32 | source utf-8 | has_phase u8
//! ```

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::signal::{CwtGeometry, Provenance, ScaleKind, Spectrogram};

pub const MAGIC: &[u8; 4] = b"DFNT";
pub const VERSION: u16 = 1;
const DTYPE_F32: u8 = 1;

#[derive(Debug, Error)]
pub enum TensorFileError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("not a tensor file (bad magic)")]
    BadMagic,
    #[error("unsupported tensor file version {0}")]
    VersionMismatch(u16),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("unknown tensor kind code {0}")]
    UnknownKind(u8),
    #[error("file ends early")]
    Truncated,
    #[error("corrupt tensor file: {0}")]
    Corrupt(String),
    #[error("tensor is not a {0}")]
    WrongShape(String),
    #[error("png: {0}")]
    Png(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Raw,
    Scale(ScaleKind),
}

impl TensorKind {
    fn code(self) -> u8 {
        match self {
            TensorKind::Raw => 0,
            TensorKind::Scale(ScaleKind::Linear) => 1,
            TensorKind::Scale(ScaleKind::Log) => 2,
            TensorKind::Scale(ScaleKind::LogRe) => 3,
        }
    }

    fn from_code(c: u8) -> Result<Self, TensorFileError> {
        Ok(match c {
            0 => TensorKind::Raw,
            1 => TensorKind::Scale(ScaleKind::Linear),
            2 => TensorKind::Scale(ScaleKind::Log),
            3 => TensorKind::Scale(ScaleKind::LogRe),
            other => return Err(TensorFileError::UnknownKind(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub kind: TensorKind,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
    pub phase: Option<Vec<f32>>,
    pub geometry: Option<CwtGeometry>,
    pub seed: u64,
    pub config_hash: u64,
    pub source: String,
}

impl TensorFile {
    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            kind: TensorKind::Raw,
            dims: vec![m.rows(), m.cols()],
            data: m.as_slice().iter().map(|&v| v as f32).collect(),
            phase: None,
            geometry: None,
            seed: 0,
            config_hash: 0,
            source: String::new(),
        }
    }

    pub fn from_spectrogram(sp: &Spectrogram, seed: u64, config_hash: u64) -> Self {
        Self {
            kind: TensorKind::Scale(sp.scale_kind),
            dims: vec![sp.data.rows(), sp.data.cols()],
            data: sp.data.as_slice().iter().map(|&v| v as f32).collect(),
            phase: Some(sp.provenance.phase.as_slice().iter().map(|&v| v as f32).collect()),
            geometry: Some(sp.provenance.geometry.clone()),
            seed,
            config_hash,
            source: sp.provenance.source.clone(),
        }
    }

    pub fn matrix(&self) -> Result<Matrix, TensorFileError> {
        let (r, c) = self.matrix_dims()?;
        to_matrix(r, c, &self.data)
    }

    fn matrix_dims(&self) -> Result<(usize, usize), TensorFileError> {
        match self.dims.as_slice() {
            [r, c] => Ok((*r, *c)),
            _ => Err(TensorFileError::WrongShape(format!("matrix (dims {:?})", self.dims))),
        }
    }

    pub fn to_spectrogram(&self) -> Result<Spectrogram, TensorFileError> {
        let TensorKind::Scale(kind) = self.kind else {
            return Err(TensorFileError::WrongShape("spectrogram (raw tensor)".into()));
        };
        let (r, c) = self.matrix_dims()?;
        let phase = match &self.phase {
            Some(p) => to_matrix(r, c, p)?,
            None => Matrix::zeros(r, c),
        };
        let geometry = self
            .geometry
            .clone()
            .ok_or_else(|| TensorFileError::Corrupt("spectrogram without geometry".into()))?;
        Ok(Spectrogram {
            data: self.matrix()?,
            scale_kind: kind,
            provenance: Provenance {
                source: self.source.clone(),
                phase,
                geometry,
            },
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.data.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(DTYPE_F32);
        out.push(self.kind.code());
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        let empty = CwtGeometry {
            sample_rate: 0.0,
            scale_frequencies: Vec::new(),
            frame_hop: 0.0,
            first_center: 0.0,
            signal_len: 0,
            omega0: 0.0,
        };
        let g = self.geometry.as_ref().unwrap_or(&empty);
        for v in [g.sample_rate, g.frame_hop, g.first_center] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(g.signal_len as u64).to_le_bytes());
        out.extend_from_slice(&g.omega0.to_le_bytes());
        out.extend_from_slice(&(g.scale_frequencies.len() as u32).to_le_bytes());
        for f in &g.scale_frequencies {
            out.extend_from_slice(&f.to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        out.extend_from_slice(&(self.source.len() as u32).to_le_bytes());
        out.extend_from_slice(self.source.as_bytes());
        out.push(self.phase.is_some() as u8);
        for v in self.data.iter().chain(self.phase.iter().flatten()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TensorFileError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(TensorFileError::BadMagic);
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(TensorFileError::VersionMismatch(version));
        }
        let dtype = r.u8()?;
        if dtype != DTYPE_F32 {
            return Err(TensorFileError::UnsupportedDtype(dtype));
        }
        let kind = TensorKind::from_code(r.u8()?)?;
        let ndim = r.u8()? as usize;
        let dims: Vec<usize> = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_, _>>()?;
        let sample_rate = r.f64()?;
        let frame_hop = r.f64()?;
        let first_center = r.f64()?;
        let signal_len = r.u64()? as usize;
        let omega0 = r.f64()?;
        let n_freq = r.u32()? as usize;
        let scale_frequencies = (0..n_freq).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let seed = r.u64()?;
        let config_hash = r.u64()?;
        let source_len = r.u32()? as usize;
        let source = String::from_utf8(r.take(source_len)?.to_vec())
            .map_err(|_| TensorFileError::Corrupt("source is not utf-8".into()))?;
        let has_phase = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(TensorFileError::Corrupt(format!("phase flag {other}"))),
        };
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TensorFileError::Corrupt("dims overflow".into()))?;
        let data = r.f32s(count)?;
        let phase = if has_phase { Some(r.f32s(count)?) } else { None };
        if r.pos != bytes.len() {
            return Err(TensorFileError::Corrupt(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        let geometry = (sample_rate > 0.0).then_some(CwtGeometry {
            sample_rate,
            scale_frequencies,
            frame_hop,
            first_center,
            signal_len,
            omega0,
        });
        Ok(Self {
            kind,
            dims,
            data,
            phase,
            geometry,
            seed,
            config_hash,
            source,
        })
    }
}

fn to_matrix(r: usize, c: usize, data: &[f32]) -> Result<Matrix, TensorFileError> {
    Matrix::from_vec(r, c, data.iter().map(|&v| v as f64).collect())
        .map_err(|e| TensorFileError::Corrupt(e.to_string()))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TensorFileError> {
        let end = self.pos.checked_add(n).ok_or(TensorFileError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(TensorFileError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], TensorFileError> {
        Ok(self.take(N)?.try_into().expect("slice length"))
    }

    fn u8(&mut self) -> Result<u8, TensorFileError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, TensorFileError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, TensorFileError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, TensorFileError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, TensorFileError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, TensorFileError> {
        let bytes = self.take(n.checked_mul(4).ok_or(TensorFileError::Truncated)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk length")))
            .collect())
    }
}

pub fn write_tensor(path: impl AsRef<Path>, t: &TensorFile) -> Result<(), TensorFileError> {
    fs::write(path, t.to_bytes())?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<TensorFile, TensorFileError> {
    TensorFile::from_bytes(&fs::read(path)?)
}

/// Grayscale 8-bit PNG, min-max normalized; row 0 is the top of the image.
pub fn export_png(path: impl AsRef<Path>, m: &Matrix) -> Result<(), TensorFileError> {
    let lo = m.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = m.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let pixels: Vec<u8> = m
        .as_slice()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    let file = fs::File::create(path)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), m.cols() as u32, m.rows() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| TensorFileError::Png(e.to_string()))?;
    writer
        .write_image_data(&pixels)
        .map_err(|e| TensorFileError::Png(e.to_string()))?;
    writer.finish().map_err(|e| TensorFileError::Png(e.to_string()))?;
    Ok(())
}

/// Writes raw bytes through a temporary sibling so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

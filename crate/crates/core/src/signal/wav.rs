use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{Signal, SignalError};

/// Reads an 8/16/24-bit PCM file, averaging channels into mono and mapping
/// full scale to `[-1, 1]`.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Signal, SignalError> {
    let reader = WavReader::open(path.as_ref()).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int {
        return Err(SignalError::UnsupportedEncoding("floating-point samples".into()));
    }
    if !matches!(spec.bits_per_sample, 8 | 16 | 24) {
        return Err(SignalError::UnsupportedEncoding(format!(
            "{}-bit PCM",
            spec.bits_per_sample
        )));
    }
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(SignalError::MalformedWav("zero channels".into()));
    }
    let full_scale = (1u32 << (spec.bits_per_sample - 1)) as f64;

    let raw: Vec<i32> = reader
        .into_samples::<i32>()
        .collect::<Result<_, _>>()
        .map_err(map_hound)?;
    if raw.len() % channels != 0 {
        return Err(SignalError::MalformedWav("partial trailing frame".into()));
    }
    let samples = raw
        .chunks_exact(channels)
        .map(|frame| {
            let mean = frame.iter().map(|&v| v as f64).sum::<f64>() / channels as f64;
            (mean / full_scale).clamp(-1.0, 1.0)
        })
        .collect();
    Signal::new(samples, spec.sample_rate as f64)
}

/// Writes mono 16-bit PCM, clipping to `[-1, 1]`.
pub fn write_wav_i16(path: impl AsRef<Path>, signal: &Signal) -> Result<(), SignalError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate.round() as u32,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path.as_ref(), spec).map_err(map_hound)?;
    for &s in &signal.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

fn map_hound(e: hound::Error) -> SignalError {
    match e {
        hound::Error::IoError(io)
            if matches!(
                io.kind(),
                ErrorKind::UnexpectedEof | ErrorKind::InvalidData | ErrorKind::Other
            ) =>
        {
            SignalError::MalformedWav(io.to_string())
        }
        hound::Error::IoError(io) => SignalError::Io(io),
        hound::Error::Unsupported => SignalError::UnsupportedEncoding("unsupported wav feature".into()),
        other => SignalError::MalformedWav(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, channels: u16, bits: u16, frames: &[Vec<i32>]) {
        let spec = WavSpec {
            channels,
            sample_rate: 8000,
            bits_per_sample: bits,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for frame in frames {
            for &v in frame {
                match bits {
                    8 => w.write_sample(v as i8).unwrap(),
                    16 => w.write_sample(v as i16).unwrap(),
                    _ => w.write_sample(v).unwrap(),
                }
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn zeros_keep_rate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.wav");
        write_raw(&p, 1, 16, &vec![vec![0]; 100]);
        let s = load_wav(&p).unwrap();
        assert_eq!(s.sample_rate, 8000.0);
        assert_eq!(s.samples, vec![0.0; 100]);
    }

    #[test]
    fn full_scale_maps_to_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        write_raw(&p, 1, 16, &[vec![32767], vec![-32768]]);
        let s = load_wav(&p).unwrap();
        assert!((s.samples[0] - 1.0).abs() < 1e-4);
        assert_eq!(s.samples[1], -1.0);

        let p24 = dir.path().join("f24.wav");
        write_raw(&p24, 1, 24, &[vec![(1 << 23) - 1]]);
        assert!((load_wav(&p24).unwrap().samples[0] - 1.0).abs() < 1e-6);

        let p8 = dir.path().join("f8.wav");
        write_raw(&p8, 1, 8, &[vec![127]]);
        assert!((load_wav(&p8).unwrap().samples[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_raw(&p, 2, 16, &vec![vec![16384, -16384]; 50]);
        let s = load_wav(&p).unwrap();
        assert!(s.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn garbage_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.wav");
        std::fs::write(&p, b"RIFF\x10\x00\x00\x00WAVEjunkjunk").unwrap();
        let r = load_wav(&p);
        assert!(matches!(r, Err(SignalError::MalformedWav(_))), "{r:?}");
    }

    #[test]
    fn float_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f32.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(0.5f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(load_wav(&p), Err(SignalError::UnsupportedEncoding(_))));
    }
}

use std::f64::consts::PI;

use super::Signal;

/// Zero crossings of the sinc kernel on each side of the output point.
const HALF_TAPS: usize = 32;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Blackman window over `|x| ≤ half`.
fn blackman(x: f64, half: f64) -> f64 {
    if x.abs() >= half {
        return 0.0;
    }
    let u = (x / half + 1.0) * 0.5;
    0.42 - 0.5 * (2.0 * PI * u).cos() + 0.08 * (4.0 * PI * u).cos()
}

/// Band-limited resampling with a 64-tap Blackman-windowed sinc. When
/// downsampling, the cutoff drops to the new Nyquist rate and the kernel
/// widens accordingly. Edges are extended by sample replication.
pub fn resample(s: &Signal, target_hz: f64) -> Signal {
    assert!(target_hz > 0.0, "target rate must be positive");
    if target_hz == s.sample_rate || s.samples.is_empty() {
        return Signal {
            samples: s.samples.clone(),
            sample_rate: target_hz,
        };
    }
    let ratio = s.sample_rate / target_hz;
    let cutoff = (1.0 / ratio).min(1.0);
    let half = HALF_TAPS as f64 / cutoff;
    let out_len = ((s.samples.len() as f64) / ratio).round().max(1.0) as usize;
    let last = s.samples.len() as isize - 1;

    let samples = (0..out_len)
        .map(|k| {
            let t = k as f64 * ratio;
            let lo = (t - half).ceil() as isize;
            let hi = (t + half).floor() as isize;
            let (mut acc, mut norm) = (0.0, 0.0);
            for j in lo..=hi {
                let d = t - j as f64;
                let w = cutoff * sinc(cutoff * d) * blackman(d, half);
                acc += w * s.samples[j.clamp(0, last) as usize];
                norm += w;
            }
            acc / norm
        })
        .collect();
    Signal {
        samples,
        sample_rate: target_hz,
    }
}

/// Shifts pitch by `scale` by resampling to `rate/scale` and re-labelling
/// the result with the original rate; duration changes by `1/scale`.
pub fn pitch_shift(s: &Signal, scale: f64) -> Signal {
    assert!(scale > 0.0, "pitch scale must be positive");
    let mut shifted = resample(s, s.sample_rate / scale);
    shifted.sample_rate = s.sample_rate;
    shifted
}

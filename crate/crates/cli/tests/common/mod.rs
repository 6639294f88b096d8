#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dfn_core::signal::{write_wav_i16, Signal};

const TONES: [f64; 8] = [220.0, 330.0, 440.0, 660.0, 880.0, 1320.0, 1760.0, 2640.0];

/// Sum of one to three tones with a slow amplitude envelope.
pub fn tone_mixture(rng: &mut impl Rng, duration: f64, rate: f64) -> Signal {
    let n = (duration * rate).round() as usize;
    let k = rng.gen_range(1..=3);
    let parts: Vec<(f64, f64, f64, f64)> = (0..k)
        .map(|_| {
            let f = TONES[rng.gen_range(0..TONES.len())];
            (f, rng.gen_range(0.1..0.3), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.5..2.0))
        })
        .collect();
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            parts
                .iter()
                .map(|&(f, a, p, env)| a * (0.6 + 0.4 * (PI * env * t).cos()) * (2.0 * PI * f * t + p).sin())
                .sum()
        })
        .collect();
    Signal::new(samples, rate).unwrap()
}

/// Writes `clips` tone-mixture WAV files and a manifest; returns the
/// manifest path.
pub fn tone_dataset(dir: &Path, clips: usize, duration: f64, seed: u64) -> PathBuf {
    let audio = dir.join("audio");
    std::fs::create_dir_all(&audio).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = String::from("path,label,duration,split\n");
    for i in 0..clips {
        let s = tone_mixture(&mut rng, duration, 16000.0);
        let name = format!("clip{i:04}.wav");
        write_wav_i16(audio.join(&name), &s).unwrap();
        manifest.push_str(&format!("audio/{name},tones,{duration},train\n"));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    path
}

//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything; numeric arguments
//! (`cargo test --test acceptance -- 1 5`) select criteria. Failed criteria
//! are listed at the end; `--strict` also turns them into a non-zero exit.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use dfn_core::eval::{frechet_distance, FeatureStats};
use dfn_core::gan::{d_loss, g_loss, g_ls_loss, generator_objective, GanConfig, GanModel, TrainState};
use dfn_core::linalg::{dfn, dfn_gradient, eigenvalues, real_schur, GradientOptions, Matrix, SchurOptions};
use dfn_core::signal::{cwt_morlet, invert_cwt, pitch_shift, snr_db, CwtParams, Signal};
use dfn_harness::eval::{cmd_eval, EvalMode};
use dfn_harness::gmm::cmd_gmm_benchmark;
use dfn_harness::spectrograms::cmd_make_spectrograms;
use dfn_harness::train::cmd_train;
use dfn_harness::{ExperimentConfig, Outcome, Variant};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn gaussian(rng: &mut impl Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Modified Gram–Schmidt orthonormalization of a random Gaussian matrix.
fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Matrix {
    let a = gaussian(rng, n, n);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    for j in 0..n {
        for k in 0..j {
            let d: f64 = (0..n).map(|i| cols[j][i] * cols[k][i]).sum();
            for i in 0..n {
                cols[j][i] -= d * cols[k][i];
            }
        }
        let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|v| *v /= norm);
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

fn fro2(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum()
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_normal: f64 = 0.0;
    for i in 0..1000 {
        let n = rng.gen_range(4..=32);
        let a = gaussian(&mut rng, n, n);
        let m = match i % 3 {
            0 => a.add(&a.transpose()).unwrap(),
            1 => random_orthogonal(&mut rng, n),
            _ => a.sub(&a.transpose()).unwrap(),
        };
        worst_normal = worst_normal.max(dfn(&m).unwrap() / (1.0 + fro2(&m)));
    }

    let mut worst_tri: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(4..=32);
        let a = gaussian(&mut rng, n, n);
        let t = Matrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { 0.0 });
        let expect: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| t[(i, j)].powi(2)).sum();
        worst_tri = worst_tri.max((dfn(&t).unwrap() - expect).abs() / expect);
    }

    let mut worst_inv: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(4..=32);
        let a = gaussian(&mut rng, n, n);
        let q = random_orthogonal(&mut rng, n);
        let b = q.matmul(&a).unwrap().matmul(&q.transpose()).unwrap();
        let (da, db) = (dfn(&a).unwrap(), dfn(&b).unwrap());
        worst_inv = worst_inv.max((da - db).abs() / da);
    }

    verdict(
        worst_normal <= 1e-8 && worst_tri <= 1e-9 && worst_inv <= 1e-7,
        format!(
            "normal max dfn/(1+|A|^2) {worst_normal:.2e} (<= 1e-8), triangular rel {worst_tri:.2e} (<= 1e-9), \
             unitary invariance rel {worst_inv:.2e} (<= 1e-7)"
        ),
    )
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut d = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        if a[p][k] == 0.0 {
            return 0.0;
        }
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        d *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    d
}

/// Characteristic polynomial coefficients (monic, highest first) by
/// Faddeev–LeVerrier.
fn char_poly(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![1.0];
    let mut m = Matrix::zeros(n, n);
    for k in 1..=n {
        let prev = *coeffs.last().unwrap();
        m = a.matmul(&m).unwrap().add(&Matrix::identity(n).scale(prev)).unwrap();
        let c = -a.matmul(&m).unwrap().trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn poly_eval(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &ci in c {
        dp = dp * z + p;
        p = p * z + ci;
    }
    (p, dp)
}

/// Durand–Kerner roots, polished by Newton steps.
fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = poly_eval(c, z[i]).0 / den;
            z[i] -= step;
        }
    }
    for r in &mut z {
        for _ in 0..5 {
            let (p, dp) = poly_eval(c, *r);
            if dp.norm() > 0.0 {
                *r -= p / dp;
            }
        }
    }
    z
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_res, mut worst_trace, mut worst_det, mut worst_poly): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..500 {
        let n = rng.gen_range(1..=8);
        let a = gaussian(&mut rng, n, n);
        let scale = a.frobenius_norm();
        let s = real_schur(&a, &SchurOptions::default()).unwrap();
        let back = s.q.matmul(&s.t).unwrap().matmul(&s.q.transpose()).unwrap();
        worst_res = worst_res.max(back.sub(&a).unwrap().frobenius_norm() / scale);

        let ev = eigenvalues(&a).unwrap().values;
        let sum: Complex64 = ev.iter().sum();
        let prod: Complex64 = ev.iter().product();
        worst_trace = worst_trace.max((sum - a.trace()).norm() / scale);
        worst_det = worst_det.max((prod - det(&a)).norm() / scale.powi(n as i32));

        if n <= 4 {
            let mut roots = poly_roots(&char_poly(&a));
            for l in &ev {
                let (k, r) = roots
                    .iter()
                    .enumerate()
                    .min_by(|x, y| (x.1 - l).norm().total_cmp(&(y.1 - l).norm()))
                    .map(|(k, r)| (k, *r))
                    .unwrap();
                worst_poly = worst_poly.max((r - l).norm() / r.norm().max(1.0));
                roots.remove(k);
            }
        }
    }
    verdict(
        worst_res <= 1e-9 && worst_trace <= 1e-9 && worst_det <= 1e-9 && worst_poly <= 1e-7,
        format!(
            "residual/|A| {worst_res:.2e} (<= 1e-9), trace {worst_trace:.2e}, det {worst_det:.2e}, \
             char-poly match {worst_poly:.2e} (<= 1e-7)"
        ),
    )
}

fn min_gap(m: &Matrix) -> f64 {
    let ev = eigenvalues(m).unwrap().values;
    let mut g = f64::INFINITY;
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            g = g.min((ev[i] - ev[j]).norm());
        }
    }
    g
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < 100 {
        let m = gaussian(&mut rng, 8, 8);
        if min_gap(&m) <= 1e-3 {
            continue;
        }
        tested += 1;
        let g = dfn_gradient(&m, &GradientOptions::default()).unwrap();
        let h = 1e-5;
        let mut fd = vec![0.0; 64];
        for k in 0..64 {
            let mut p = m.as_slice().to_vec();
            p[k] += h;
            let up = dfn(&Matrix::from_vec(8, 8, p.clone()).unwrap()).unwrap();
            p[k] -= 2.0 * h;
            let down = dfn(&Matrix::from_vec(8, 8, p).unwrap()).unwrap();
            fd[k] = (up - down) / (2.0 * h);
        }
        worst = worst.max(rel_err(g.as_slice(), &fd));
    }

    let cfg = GanConfig {
        n: 16,
        latent_dim: 4,
        gen_channels: 8,
        disc_channels: 2,
        batch_size: 4,
        seed: 7,
        ..GanConfig::default()
    };
    let model = GanModel::image(&cfg).unwrap();
    let mut state = TrainState::new(&model, &cfg, 0);
    let z = state.sample_latent(4, 4);
    let gp = state.gen_params_f64();
    let dp = state.disc_params_f64();
    let base = generator_objective(&model, &cfg, &gp, &dp, &z, 0.0, 0.0, 1.0).unwrap();
    // Put the real mean well away from the fake mean so the penalty is active.
    let dfn_real = base.dfn_fake_mean + 5.0;
    let obj = |p: &[f64]| generator_objective(&model, &cfg, p, &dp, &z, dfn_real, 0.0, 1.0).unwrap();
    let analytic = obj(&gp);
    let h = 1e-6;
    let fd: Vec<f64> = (0..gp.len())
        .map(|k| {
            let mut p = gp.clone();
            p[k] += h;
            let up = obj(&p).parts.total;
            p[k] -= 2.0 * h;
            let down = obj(&p).parts.total;
            (up - down) / (2.0 * h)
        })
        .collect();
    let e2e = rel_err(&analytic.grad, &fd);
    verdict(
        worst <= 1e-4 && e2e <= 1e-3 && analytic.parts.penalty > 0.0 && gp.len() <= 2000,
        format!(
            "dfn_gradient vs FD worst rel {worst:.2e} over {tested} matrices (<= 1e-4); generator end-to-end rel \
             {e2e:.2e} (<= 1e-3) with {} parameters, penalty {:.3}",
            gp.len(),
            analytic.parts.penalty
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (a, b, c) in [(0.0, 1.0, 1.0), (-1.0, 1.0, 0.0)] {
        for sym in [false, true] {
            ok &= d_loss(&[b; 5], &[a; 7], a, b, sym).unwrap() == 0.0;
        }
        ok &= d_loss(&[b + 1.0; 6], &[a; 3], a, b, false).unwrap() == 0.5;
        let zero = g_loss(&[c; 4], c, 2.0, 2.05, 0.1, 3.0).unwrap();
        ok &= zero.total == 0.0 && zero.penalty == 0.0;
        ok &= g_loss(&[c + 2.0; 9], c, 0.0, 7.0, 0.0, 0.0).unwrap().total == 2.0;
        ok &= g_loss(&[c; 2], c, 1.75, 1.0, 0.25, 10.0).unwrap().penalty == 5.0;
    }
    notes.push(format!("closed forms {}", if ok { "exact" } else { "MISMATCH" }));

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_direct: f64 = 0.0;
    let mut bit_equal = true;
    for _ in 0..1000 {
        let n = rng.gen_range(1..20);
        let real: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let fake: Vec<f64> = (0..n + 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let mut sr = 0.0;
        for s in &real {
            sr += (s - b) * (s - b);
        }
        let mut sf = 0.0;
        for s in &fake {
            sf += (s - a) * (s - a);
        }
        let direct = 0.5 * sr / real.len() as f64 + sf / fake.len() as f64;
        let got = d_loss(&real, &fake, a, b, false).unwrap();
        worst_direct = worst_direct.max((got - direct).abs() / direct.max(1e-300));
        let c = rng.gen_range(-1.0..1.0);
        let parts = g_loss(&fake, c, rng.gen_range(0.0..9.0), rng.gen_range(0.0..9.0), rng.gen_range(0.0..1.0), 0.0).unwrap();
        bit_equal &= parts.total.to_bits() == g_ls_loss(&fake, c).unwrap().to_bits();
    }
    notes.push(format!("d_loss vs scalar re-evaluation {worst_direct:.1e}"));
    notes.push(format!("lambda=0 bit-identical: {bit_equal}"));
    verdict(ok && worst_direct <= 1e-14 && bit_equal, notes.join(", "))
}

fn stats(mean: Vec<f64>, cov: Matrix) -> FeatureStats {
    FeatureStats { mean, cov, count: 100 }
}

fn random_stats(rng: &mut impl Rng, d: usize) -> FeatureStats {
    let a = gaussian(rng, d, d + 3);
    let cov = a.matmul(&a.transpose()).unwrap().scale(1.0 / (d + 3) as f64);
    stats((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(), cov)
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let s = random_stats(&mut rng, 8);
    let self_zero = frechet_distance(&s, &s).unwrap();
    let one = |m: f64, v: f64| stats(vec![m], Matrix::from_rows(&[&[v]]));
    let nine = frechet_distance(&one(0.0, 1.0), &one(3.0, 1.0)).unwrap();
    let unit = frechet_distance(&one(0.0, 1.0), &one(0.0, 4.0)).unwrap();

    let mut worst_diag: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for _ in 0..50 {
        let d = 6;
        let (mr, mg): (Vec<f64>, Vec<f64>) = (0..d).map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).unzip();
        let (vr, vg): (Vec<f64>, Vec<f64>) = (0..d).map(|_| (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0))).unzip();
        let expect: f64 = (0..d).map(|k| (mr[k] - mg[k]).powi(2) + (vr[k].sqrt() - vg[k].sqrt()).powi(2)).sum();
        let got = frechet_distance(&stats(mr, Matrix::from_diag(&vr)), &stats(mg, Matrix::from_diag(&vg))).unwrap();
        worst_diag = worst_diag.max((got - expect).abs());

        let (r, g) = (random_stats(&mut rng, 8), random_stats(&mut rng, 8));
        let (x, y) = (frechet_distance(&r, &g).unwrap(), frechet_distance(&g, &r).unwrap());
        worst_sym = worst_sym.max((x - y).abs() / x.abs().max(y.abs()));
    }
    verdict(
        self_zero == 0.0 && (nine - 9.0).abs() <= 1e-8 && (unit - 1.0).abs() <= 1e-8 && worst_diag <= 1e-8 && worst_sym <= 1e-8,
        format!(
            "self {self_zero}, 1-D {nine:.10} (9) and {unit:.10} (1), diagonal closed form {worst_diag:.1e}, \
             symmetry rel {worst_sym:.1e}"
        ),
    )
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    rel_err(b, a)
}

/// Frequency of the largest DFT bin between `lo` and `hi` Hz.
fn dft_peak(x: &[f64], rate: f64, lo: f64, hi: f64) -> f64 {
    let n = x.len();
    let bin = rate / n as f64;
    let (k0, k1) = ((lo / bin) as usize, (hi / bin) as usize);
    (k0..=k1)
        .map(|k| {
            let w = 2.0 * PI * k as f64 / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                re += v * (w * i as f64).cos();
                im -= v * (w * i as f64).sin();
            }
            (k as f64 * bin, re * re + im * im)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

fn criterion_6() -> Verdict {
    let p = CwtParams::default();
    let mut worst_rt: f64 = 0.0;
    for (f, ph) in [(220.0, 0.7), (1000.0, 0.0), (2500.0, 2.0), (5000.0, -1.0)] {
        let s = Signal::tone(f, 0.5, ph, 1.0, 16000.0);
        let c = cwt_morlet(&s, &p).unwrap();
        let back = invert_cwt(&c.magnitude, &c.phase, &c.geometry).unwrap();
        worst_rt = worst_rt.max(rel_l2(&s.samples, &back.samples));
    }
    let x = Signal::tone(300.0, 0.3, 0.2, 0.5, 16000.0);
    let snr_self = snr_db(&x, &x).unwrap();
    let tone = Signal::tone(1000.0, 0.5, 0.0, 0.5, 16000.0);
    let mut worst_pitch: f64 = 0.0;
    for scale in [0.75, 0.9, 1.15, 1.5] {
        let f = dft_peak(&pitch_shift(&tone, scale).samples, 16000.0, 500.0, 2000.0);
        worst_pitch = worst_pitch.max((f / (1000.0 * scale) - 1.0).abs());
    }
    verdict(
        worst_rt <= 0.05 && snr_self == 0.0 && worst_pitch <= 0.02,
        format!(
            "tone round trip worst rel L2 {worst_rt:.4} (<= 0.05), snr_db(x,x) = {snr_self}, pitch-shift worst \
             frequency error {:.2}% (<= 2%)",
            worst_pitch * 100.0
        ),
    )
}

/// Round trip of 200 Hz to 3 kHz noise; reported, not counted.
fn noise_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s = vec![0.0; 16000];
    for _ in 0..200 {
        let f = rng.gen_range(200.0..3000.0);
        let ph = rng.gen_range(0.0..2.0 * PI);
        for (v, t) in s.iter_mut().zip(Signal::tone(f, 0.02, ph, 1.0, 16000.0).samples) {
            *v += t;
        }
    }
    let s = Signal::new(s, 16000.0).unwrap();
    let c = cwt_morlet(&s, &CwtParams::default()).unwrap();
    let back = invert_cwt(&c.magnitude, &c.phase, &c.geometry).unwrap();
    let err = rel_l2(&s.samples, &back.samples);
    verdict(err <= 0.10, format!("band-limited noise rel L2 {err:.3} (target <= 0.10)"))
}

fn criterion_7() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::load(None, &[format!("out={}", dir.path().display())]).unwrap();
    let report = cmd_gmm_benchmark(&cfg).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for v in Variant::ALL.into_iter().filter(|v| v.uses_dfn()) {
        let with = report.row(v).unwrap().mean_modes;
        let without = report.row(v.baseline()).unwrap().mean_modes;
        ok &= with >= without;
        notes.push(format!("{} {with:.1} vs {} {without:.1}", v.label(), v.baseline().label()));
    }
    verdict(
        ok,
        format!(
            "mean detected modes over {} seeds x {} iterations: {}",
            cfg.u64("gmm_repeats"),
            cfg.u64("gmm_iters"),
            notes.join("; ")
        ),
    )
}

const PIPELINE_SETTINGS: &[&str] = &[
    "scale_kinds=log",
    "latent_dim=32",
    "gen_channels=32",
    "disc_channels=8",
    "batch_size=16",
    "max_iters=600",
    "checkpoint_every=100",
    "fid_every=100",
    "fid_sample_count=128",
    "snr_sample_count=16",
];

fn pipeline(manifest: &std::path::Path, out: &std::path::Path) -> (Vec<u8>, dfn_harness::eval::EvalReport) {
    let mut ov: Vec<String> = PIPELINE_SETTINGS.iter().map(|s| s.to_string()).collect();
    ov.push(format!("manifest={}", manifest.display()));
    ov.push(format!("out={}", out.display()));
    let cfg = ExperimentConfig::load(None, &ov).unwrap();
    assert_eq!(cmd_make_spectrograms(&cfg).unwrap().0, Outcome::Success);
    assert_eq!(cmd_train(&cfg).unwrap().0, Outcome::Success);
    let (o, report) = cmd_eval(&cfg, None, EvalMode::Fid).unwrap();
    assert_eq!(o, Outcome::Success);
    (std::fs::read(out.join("eval/report.json")).unwrap(), report)
}

fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::tone_dataset(dir.path(), 500, 2.0, 808);
    let (first, report) = pipeline(&manifest, &dir.path().join("run1"));
    let (second, _) = pipeline(&manifest, &dir.path().join("run2"));
    let mut ok = first == second;
    let mut notes = vec![format!("reports byte-identical: {}", first == second)];
    for row in &report.rows {
        for v in &row.variants {
            let (init, best) = (v.fid_init.unwrap(), v.fid_best.unwrap());
            ok &= best <= 0.5 * init;
            notes.push(format!("{} {}: best/init FID {:.3}/{:.3} = {:.2}", v.variant, row.kind, best, init, best / init));
        }
    }
    ok &= report.rows.iter().map(|r| r.variants.len()).sum::<usize>() == 4;
    verdict(ok, notes.join("; "))
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Option<Duration>,
    counted: bool,
    run: fn() -> Verdict,
}

fn main() {
    let criteria = [
        Criterion { id: "1", name: "DFN correctness", limit: Some(Duration::from_secs(30)), counted: true, run: criterion_1 },
        Criterion { id: "2", name: "Eigen/Schur", limit: Some(Duration::from_secs(60)), counted: true, run: criterion_2 },
        Criterion { id: "3", name: "Gradients", limit: Some(Duration::from_secs(300)), counted: true, run: criterion_3 },
        Criterion { id: "4", name: "Loss algebra", limit: None, counted: true, run: criterion_4 },
        Criterion { id: "5", name: "Frechet distance", limit: None, counted: true, run: criterion_5 },
        Criterion { id: "6", name: "Signal round trip", limit: None, counted: true, run: criterion_6 },
        Criterion { id: "6n", name: "Noise round trip (informational)", limit: None, counted: false, run: noise_round_trip },
        Criterion { id: "7", name: "GMM mode collapse", limit: Some(Duration::from_secs(1200)), counted: true, run: criterion_7 },
        Criterion { id: "8", name: "Synthetic tone pipeline", limit: Some(Duration::from_secs(3600)), counted: true, run: criterion_8 },
    ];
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--strict");
    let selected: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for c in &criteria {
        let wanted = selected.is_empty() || selected.iter().any(|s| c.id.trim_end_matches('n') == s.as_str());
        if !wanted {
            continue;
        }
        let t = Instant::now();
        let v = (c.run)();
        let took = t.elapsed();
        let in_time = c.limit.is_none_or(|l| took <= l);
        let pass = v.pass && in_time;
        let limit = c.limit.map(|l| format!(" / limit {} s", l.as_secs())).unwrap_or_default();
        let tag = match (pass, c.counted) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (not counted)",
        };
        println!("{tag} [{}] {}: {} ({:.1} s{limit})", c.id, c.name, v.detail, took.as_secs_f64());
        if !pass && c.counted {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("all selected criteria passed");
    } else {
        println!("{} criteria failed: {}", failed.len(), failed.join(", "));
        if strict {
            std::process::exit(1);
        }
    }
}

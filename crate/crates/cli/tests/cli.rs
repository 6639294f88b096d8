mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dfn_core::linalg::Matrix;
use dfn_core::signal::{write_wav_i16, Signal};
use dfn_core::tensorfile::{write_tensor, TensorFile};

fn dfngan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfngan")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn files_in(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

/// Small but complete settings for spectrogram experiments.
fn small_config(dir: &Path, manifest: &Path) -> PathBuf {
    let text = format!(
        "manifest = {}\nout = {}\nn = 16\nn_scales = 16\nscale_kinds = log\n\
         latent_dim = 8\ngen_channels = 8\ndisc_channels = 4\nbatch_size = 4\n\
         max_iters = 4\ncheckpoint_every = 2\nfid_every = 2\n\
         fid_sample_count = 8\nsnr_sample_count = 2\n",
        manifest.display(),
        dir.join("out").display()
    );
    let p = dir.join("exp.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn empty_manifest_gives_empty_index() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    std::fs::write(&m, "path,label,duration\n").unwrap();
    let out = dir.path().join("out");
    let o = dfngan(&["make-spectrograms", "--out", out.to_str().unwrap(), &format!("manifest={}", m.display())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let index = std::fs::read_to_string(out.join("spectrograms/manifest.csv")).unwrap();
    assert_eq!(index.lines().count(), 1);
}

#[test]
fn short_clip_is_augmented_and_reruns_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    write_wav_i16(dir.path().join("a.wav"), &Signal::tone(440.0, 0.5, 0.0, 1.0, 16000.0)).unwrap();
    let m = dir.path().join("m.csv");
    std::fs::write(&m, "path,label,duration\na.wav,tone,1.0\n").unwrap();
    let out = dir.path().join("out");
    let args = ["make-spectrograms", "--out", out.to_str().unwrap(), &format!("manifest={}", m.display())];

    let o = dfngan(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let spec_dir = out.join("spectrograms");
    let files = files_in(&spec_dir, "dfnt");
    assert_eq!(files.len(), 15);
    assert!(String::from_utf8_lossy(&o.stdout).contains("written 15"));
    let index = std::fs::read_to_string(spec_dir.join("manifest.csv")).unwrap();
    assert_eq!(index.lines().count(), 16);
    assert_eq!(index.lines().filter(|l| l.contains("p0.75")).count(), 3);

    let before: Vec<_> = files.iter().map(|f| std::fs::metadata(f).unwrap().modified().unwrap()).collect();
    let o = dfngan(&args);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("written 0  reused 15"));
    let after: Vec<_> = files.iter().map(|f| std::fs::metadata(f).unwrap().modified().unwrap()).collect();
    assert_eq!(before, after);
    assert_eq!(std::fs::read_to_string(spec_dir.join("manifest.csv")).unwrap(), index);
}

#[test]
fn failing_clips_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    write_wav_i16(dir.path().join("ok.wav"), &Signal::tone(440.0, 0.5, 0.0, 2.5, 16000.0)).unwrap();
    std::fs::write(dir.path().join("bad.wav"), b"not audio").unwrap();
    let partial = dir.path().join("p.csv");
    std::fs::write(&partial, "path,label,duration\nok.wav,x,2.5\nbad.wav,x,1\n").unwrap();
    let all_bad = dir.path().join("b.csv");
    std::fs::write(&all_bad, "path,label,duration\nbad.wav,x,1\nmissing.wav,x,1\n").unwrap();
    let out = dir.path().join("out");
    let run = |m: &Path| dfngan(&["make-spectrograms", "--out", out.to_str().unwrap(), &format!("manifest={}", m.display())]);

    let o = run(&partial);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.wav"));
    assert_eq!(files_in(&out.join("spectrograms"), "dfnt").len(), 3);
    assert_eq!(code(&run(&all_bad)), 1);
}

#[test]
fn invalid_config_is_rejected() {
    let o = dfngan(&["gmm-benchmark", "n=20"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("power of two"));
    assert_eq!(code(&dfngan(&["make-spectrograms", "manifest=/does/not/exist.csv"])), 1);
    assert_eq!(code(&dfngan(&["train", "bogus_key=1"])), 1);
}

#[test]
fn train_and_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let m = common::tone_dataset(dir.path(), 3, 1.0, 9);
    let cfg = small_config(dir.path(), &m);
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&dfngan(&["make-spectrograms", "--config", c])), 0);

    // Initial checkpoint only.
    let o = dfngan(&["train", "--config", c, "max_iters=0", "variants=lsgan011"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = dir.path().join("out/train/lsgan011/log");
    let ckpts = files_in(&run_dir, "dfnc");
    assert_eq!(ckpts.len(), 1);
    assert!(ckpts[0].ends_with("ckpt_00000000.dfnc"));
    assert_eq!(std::fs::read_to_string(run_dir.join("metrics.jsonl")).unwrap().lines().count(), 1);

    let o = dfngan(&["train", "--config", c, "variants=lsgan011,lsgan011-dfn"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let read_log = |v: &str| std::fs::read_to_string(dir.path().join(format!("out/train/{v}/log/metrics.jsonl"))).unwrap();
    let base_log = read_log("lsgan011");
    let dfn_log = read_log("lsgan011-dfn");
    assert_eq!(base_log.lines().count(), 3);
    assert_eq!(files_in(&run_dir, "dfnc").len(), 3);
    for line in base_log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["dfn_gap_role"], "reference");
        assert!(v["dfn_gap"].is_f64());
        assert!(v["fid"].is_f64());
    }
    for line in dfn_log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["dfn_gap_role"], "penalty");
    }

    // Determinism.
    let o = dfngan(&["train", "--config", c, "variants=lsgan011,lsgan011-dfn"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_log("lsgan011"), base_log);
    assert_eq!(read_log("lsgan011-dfn"), dfn_log);

    let o = dfngan(&["eval", "--config", c, "variants=lsgan011,lsgan011-dfn"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("| Model | log |"), "{stdout}");
    assert!(stdout.contains("| LS-GAN_011 with DFN |"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/eval/report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 1);
    let variants = report["rows"][0]["variants"].as_array().unwrap();
    assert_eq!(variants.len(), 2);
    assert_eq!(variants[0]["checkpoints_evaluated"], 3);
    assert!(variants[0]["fid_init"].is_f64());
    let first = std::fs::read(dir.path().join("out/eval/report.json")).unwrap();
    assert_eq!(code(&dfngan(&["eval-fid", "--config", c, "variants=lsgan011,lsgan011-dfn"])), 0);
    assert_eq!(std::fs::read(dir.path().join("out/eval/report.json")).unwrap(), first);

    let o = dfngan(&["eval-snr", "--config", c, "variants=lsgan011"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/eval/snr_report.json").is_file());

    // A single checkpoint, then the same checkpoint under different settings.
    let ck = run_dir.join("ckpt_00000002.dfnc");
    let o = dfngan(&["eval", "--config", c, "--checkpoint", ck.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = dfngan(&["eval", "--config", c, "--checkpoint", ck.to_str().unwrap(), "lr=0.001"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("different configuration"));
}

#[test]
fn eval_without_data_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = dfngan(&["eval", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing real data"));
}

#[test]
fn gmm_benchmark_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["gmm-benchmark", "--out", out, "--seed", "3", "gmm_repeats=1", "gmm_iters=0", "gmm_eval_samples=500"];
    let o = dfngan(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(dir.path().join("gmm/report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r["per_mode_total"].as_array().unwrap().len(), 10);
        assert!(r["mean_modes"].as_f64().unwrap() <= 10.0);
    }
    assert_eq!(report["seed"], 3);
    assert_eq!(code(&dfngan(&args)), 0);
    assert_eq!(std::fs::read(dir.path().join("gmm/report.json")).unwrap(), first);
}

#[test]
fn dfn_command() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, m: Matrix| {
        let p = dir.path().join(name);
        write_tensor(&p, &TensorFile::from_matrix(&m)).unwrap();
        p.to_str().unwrap().to_string()
    };
    let sym = write("sym.dfnt", Matrix::from_rows(&[&[1.0, 2.0, 0.5], &[2.0, -1.0, 3.0], &[0.5, 3.0, 4.0]]));
    let tri = write("tri.dfnt", Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 3.0]]));
    let wide = write("wide.dfnt", Matrix::zeros(2, 3));

    let o = dfngan(&["dfn", &sym, &tri, &tri]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6, "{text}");
    let val = |l: &str| l.split('\t').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(val(lines[0]).abs() < 1e-8);
    assert!((val(lines[1]) - 4.0).abs() < 1e-12);
    assert!(lines[3].starts_with("mean"));
    assert!((val(lines[5]) - 4.0).abs() < 1e-12);

    assert_eq!(code(&dfngan(&["dfn", &wide, &tri])), 2);
    assert_eq!(code(&dfngan(&["dfn", &wide])), 1);
}

#[test]
fn schema_lists_every_key() {
    let o = dfngan(&["schema"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8_lossy(&o.stdout);
    for key in ["manifest", "fid_sample_count", "gmm_repeats", "penalty_mode", "pitch_scales"] {
        assert!(s.contains(key), "{key}");
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use dfn_harness::eval::{cmd_eval, EvalMode};
use dfn_harness::gmm::cmd_gmm_benchmark;
use dfn_harness::spectrograms::cmd_make_spectrograms;
use dfn_harness::train::cmd_train;
use dfn_harness::{dfn::cmd_dfn, ExperimentConfig, Outcome};

#[derive(Parser)]
#[command(name = "dfngan", version, about = "DFN-regularized LS-GAN experiments on audio spectrograms")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the `out` key.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn the manifest's audio into n×n spectrogram tensors.
    MakeSpectrograms {
        /// key=value overrides.
        overrides: Vec<String>,
    },
    /// Train the configured variants on each scale kind.
    Train { overrides: Vec<String> },
    /// FID over all checkpoints, SNR at the best one, summary tables.
    #[command(alias = "eval")]
    EvalFid {
        /// Evaluate only this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        overrides: Vec<String>,
    },
    /// SNR at the best-FID checkpoint recorded during training.
    EvalSnr {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        overrides: Vec<String>,
    },
    /// Mode-collapse benchmark on a ring of Gaussians.
    GmmBenchmark { overrides: Vec<String> },
    /// Print the departure from normality of square tensor files.
    Dfn {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// List configuration keys and defaults.
    Schema,
}

fn load(cli: &Cli, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut all = Vec::new();
    if let Some(s) = cli.seed {
        all.push(format!("seed={s}"));
    }
    if let Some(o) = &cli.out {
        all.push(format!("out={}", o.display()));
    }
    all.extend(overrides.iter().cloned());
    ExperimentConfig::load(cli.config.as_deref(), &all)
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::MakeSpectrograms { overrides } => {
            let cfg = load(cli, overrides)?;
            let (o, s) = cmd_make_spectrograms(&cfg)?;
            println!(
                "clips {}  written {}  reused {}  failed {}",
                s.clips, s.written, s.reused, s.failed
            );
            Ok(o)
        }
        Command::Train { overrides } => {
            let cfg = load(cli, overrides)?;
            let (o, runs) = cmd_train(&cfg)?;
            for r in runs {
                println!(
                    "{}/{}: {} iterations, {} checkpoints, final FID {:.4}",
                    r.variant, r.kind, r.iters, r.checkpoints, r.final_fid
                );
            }
            Ok(o)
        }
        Command::EvalFid { checkpoint, overrides } | Command::EvalSnr { checkpoint, overrides } => {
            let mode = match cli.command {
                Command::EvalFid { .. } => EvalMode::Fid,
                _ => EvalMode::Snr,
            };
            let cfg = load(cli, overrides)?;
            let (o, report) = cmd_eval(&cfg, checkpoint.as_deref(), mode)?;
            print!("{}", report.summary_tables(&cfg.variants()));
            Ok(o)
        }
        Command::GmmBenchmark { overrides } => {
            let cfg = load(cli, overrides)?;
            print!("{}", cmd_gmm_benchmark(&cfg)?.summary_table());
            Ok(Outcome::Success)
        }
        Command::Dfn { files } => cmd_dfn(files, &mut std::io::stdout().lock()),
        Command::Schema => {
            print!("{}", ExperimentConfig::schema());
            Ok(Outcome::Success)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => ExitCode::from(o.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

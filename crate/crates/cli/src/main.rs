mod align;
mod ci_table;
mod config;
mod evaluate;
mod fsio;
mod models;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ensalign::acoustic::TrainConfig;
use ensalign::ensemble::DEFAULT_RANK;
use ensalign::evaluation::MethodChoice;

use crate::config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "ensalign", version, about = "Ensemble forced alignment with median boundaries and order-statistic confidence intervals")]
struct Cli {
    /// `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for file- and member-level parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align every audio file against its transcript with each ensemble member.
    Align(AlignArgs),
    /// Score hypothesis boundaries against reference TextGrids.
    Evaluate(EvaluateArgs),
    /// Train an ensemble of frame classifiers on synthetic data.
    TrainEnsemble(TrainArgs),
    /// Collect per-file interval tables and summarize interval widths.
    CiTable(CiTableArgs),
}

#[derive(Args, Debug)]
struct AlignArgs {
    /// Directory of `<id>.wav` files (16 kHz mono 16-bit PCM).
    #[arg(long)]
    audio_dir: Option<PathBuf>,
    /// Directory of `<id>.txt` transcripts.
    #[arg(long)]
    text_dir: Option<PathBuf>,
    /// Pronouncing dictionary.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Comma-separated model files, matrix directories or manifests.
    #[arg(long)]
    models: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Order-statistic rank of the interval ends.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    frame_advance_ms: Option<f64>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Directory of reference `<id>.TextGrid` files.
    #[arg(long)]
    ref_dir: Option<PathBuf>,
    /// Directory of hypothesis TextGrids or CSV tables.
    #[arg(long)]
    hyp_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Interval tier holding the boundaries.
    #[arg(long)]
    tier: Option<String>,
    /// paired, dtw or auto (paired when boundary counts match).
    #[arg(long)]
    method: Option<MethodChoice>,
    /// Value of the `data` column.
    #[arg(long)]
    data: Option<String>,
    /// Value of the `transcription` column.
    #[arg(long)]
    transcription: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Ensemble size.
    #[arg(long)]
    members: Option<usize>,
    /// Member `i` is trained with seed `seed + i`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_utterances: Option<usize>,
    #[arg(long)]
    frame_advance_ms: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
}

#[derive(Args, Debug)]
struct CiTableArgs {
    /// Directory holding the `<id>.ci.csv` files written by `align`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    transcription: Option<String>,
}

const DEFAULT_FRAME_ADVANCE_MS: f64 = 10.0;

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let workers = cfg.pick(cli.workers, "workers")?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        anyhow::ensure!(w > 0, "--workers must be at least 1");
        pool = pool.num_threads(w);
    }
    let pool = pool.build().context("starting worker pool")?;
    pool.install(|| dispatch(cli.command, &cfg))
}

fn dispatch(command: Command, cfg: &ConfigFile) -> Result<ExitCode> {
    match command {
        Command::Align(a) => {
            let models = cfg
                .pick(a.models, "models")?
                .context("missing required setting `--models`")?;
            let job = align::AlignJob {
                audio_dir: cfg.pick_path(a.audio_dir, "audio-dir"),
                text_dir: cfg.require_path(a.text_dir, "text-dir")?,
                dict: cfg.require_path(a.dict, "dict")?,
                members: models::load_members(&models)?,
                out_dir: cfg.require_path(a.out_dir, "out-dir")?,
                rank: cfg.pick_or(a.rank, "rank", DEFAULT_RANK)?,
                frame_advance_s: cfg.pick_or(a.frame_advance_ms, "frame-advance-ms", DEFAULT_FRAME_ADVANCE_MS)?
                    / 1000.0,
            };
            let outcomes = job.run()?;
            let failed: Vec<_> = outcomes.iter().filter(|o| o.result.is_err()).collect();
            for o in &failed {
                if let Err(e) = &o.result {
                    log::error!("{}: {e:#}", o.id);
                }
            }
            eprintln!("aligned {} of {} file(s)", outcomes.len() - failed.len(), outcomes.len());
            if failed.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                let names: Vec<&str> = failed.iter().map(|o| o.id.as_str()).collect();
                eprintln!("failed: {}", names.join(", "));
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Evaluate(a) => {
            let job = evaluate::EvaluateJob {
                ref_dir: cfg.require_path(a.ref_dir, "ref-dir")?,
                hyp_dir: cfg.require_path(a.hyp_dir, "hyp-dir")?,
                out_dir: cfg.require_path(a.out_dir, "out-dir")?,
                tier: cfg.pick_or(a.tier, "tier", ensalign::textgrid::PHONES_TIER.to_string())?,
                method: cfg.pick_or(a.method, "method", MethodChoice::Auto)?,
                data: cfg.pick_or(a.data, "data", String::new())?,
                transcription: cfg.pick_or(a.transcription, "transcription", String::new())?,
            };
            let out = job.run()?;
            eprintln!(
                "evaluated {} boundary(ies) in {} file(s)",
                out.report.boundary_count, out.report.file_count
            );
            print!("{}", ensalign::evaluation::error_table_csv(std::slice::from_ref(&out.row)));
            for (id, e) in &out.failures {
                log::error!("{id}: {e:#}");
            }
            if out.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{} reference file(s) could not be evaluated", out.failures.len());
                Ok(ExitCode::FAILURE)
            }
        }
        Command::TrainEnsemble(a) => {
            let d = TrainConfig::default();
            let job = train::TrainJob {
                out_dir: cfg.require_path(a.out_dir, "out-dir")?,
                members: cfg.pick_or(a.members, "members", 10)?,
                seed: cfg.pick_or(a.seed, "seed", 0)?,
                train_utterances: cfg.pick_or(a.train_utterances, "train-utterances", 40)?,
                frame_advance_s: cfg.pick_or(a.frame_advance_ms, "frame-advance-ms", DEFAULT_FRAME_ADVANCE_MS)?
                    / 1000.0,
                config: TrainConfig {
                    epochs: cfg.pick_or(a.epochs, "epochs", d.epochs)?,
                    learning_rate: cfg.pick_or(a.learning_rate, "learning-rate", d.learning_rate)?,
                    batch_size: cfg.pick_or(a.batch_size, "batch-size", d.batch_size)?,
                    l2: cfg.pick_or(a.l2, "l2", d.l2)?,
                    ..d
                },
            };
            let manifest = job.run()?;
            println!("{}", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::CiTable(a) => {
            let job = ci_table::CiTableJob {
                out_dir: cfg.require_path(a.out_dir, "out-dir")?,
                data: cfg.pick_or(a.data, "data", String::new())?,
                transcription: cfg.pick_or(a.transcription, "transcription", String::new())?,
            };
            let report = job.run()?;
            eprintln!("{} interval(s) summarized", report.boundary_count);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}

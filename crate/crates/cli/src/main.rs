//! Command-line front end: generate data, train, evaluate, stream-infer and
//! report.

mod commands;
mod overrides;
mod staging;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "phaseseg", version, about = "Causal surgical phase segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PresetName {
    Ramie,
    Autolaparo,
    Tiny,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StreamFormat {
    Csv,
    Phsf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset with a manifest.
    Gen {
        #[arg(long, value_enum)]
        preset: Option<PresetName>,
        /// Total videos, split train/val/test in a 14:4:9 ratio.
        #[arg(long)]
        videos: Option<usize>,
        #[arg(long, env = "PHASESEG_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// JSON dataset config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Config override, `dotted.key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Train on a manifest's train split, selecting on its val split.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "PHASESEG_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// JSON with optional `train` and `model` sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Suppress per-epoch progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Score a checkpoint on one split and dump its predictions.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label frames one at a time as they arrive.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Feature stream; standard input when omitted or `-`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Stream format; defaults to the input's extension, else CSV.
        #[arg(long, value_enum)]
        format: Option<StreamFormat>,
        /// Write labels here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metrics, segment counts and ribbons for prediction/label file pairs.
    Report {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen {
            preset,
            videos,
            seed,
            out,
            config,
            sets,
        } => commands::gen(preset, videos, seed, &out, config.as_deref(), &sets),
        Command::Train {
            manifest,
            out,
            seed,
            epochs,
            config,
            sets,
            quiet,
        } => commands::train(&manifest, &out, seed, epochs, config.as_deref(), &sets, quiet),
        Command::Eval {
            checkpoint,
            manifest,
            split,
            out,
        } => commands::eval(&checkpoint, &manifest, &split, &out),
        Command::Infer {
            checkpoint,
            input,
            format,
            out,
        } => commands::infer(&checkpoint, input.as_deref(), format, out.as_deref()),
        Command::Report { pred, gt, out } => commands::report(&pred, &gt, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

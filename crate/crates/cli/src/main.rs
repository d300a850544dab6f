//! `headlab`: corpus generation, training, probing, analysis and reports.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 when a command
//! fails at run time. Output directories default to `$HEADLAB_OUT/<verb>`
//! (or `runs/<verb>` when the variable is unset).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const OUT_ENV: &str = "HEADLAB_OUT";

#[derive(Parser, Debug)]
#[command(name = "headlab", version, about = "Attention-head pruning and probing laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic corpus as JSON lines.
    Synth(SynthArgs),
    /// Train one plan (every seed it lists).
    Train(TrainArgs),
    /// Train the STL, pairwise and all-task matrix and tabulate it.
    Grid(GridArgs),
    /// Probe every attention head of one or more trained models.
    Probe(ProbeArgs),
    /// Utilization images and agreement statistics.
    Analyze(AnalyzeArgs),
    /// Assemble Markdown and CSV tables from run reports.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Grammar config JSON; the built-in grammar when omitted.
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Plan JSON.
    #[arg(long)]
    pub plan: PathBuf,
    /// Corpus (`.jsonl`, or `.conllu` for POS and DEP).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Static pruning also updates the encoder in its gate stage.
    #[arg(long)]
    pub sp_train_encoder: bool,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Comma-separated tasks, e.g. `pos,ner,dep,con,srl`.
    #[arg(long)]
    pub tasks: String,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base plan; tasks and mode are overridden per cell. Defaults to the
    /// desk preset.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Comma-separated seeds overriding the plan's.
    #[arg(long)]
    pub seeds: Option<String>,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    /// Comma-separated trained run directories, one per seed.
    #[arg(long, conflicts_with = "snapshots", required_unless_present = "snapshots")]
    pub model: Option<String>,
    /// Comma-separated snapshot files, one per seed.
    #[arg(long)]
    pub snapshots: Option<String>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub task: String,
    /// Report JSON; a CSV is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Subtoken merge: `mean-sum` or `pure-mean`.
    #[arg(long, default_value = "mean-sum")]
    pub merge: String,
    /// Probe arcs to the root through the `[BOS]` position.
    #[arg(long)]
    pub keep_bos: bool,
    /// With `--model`: also save the captured snapshots, one file per model,
    /// into this directory.
    #[arg(long, requires = "model")]
    pub export_snapshots: Option<PathBuf>,
    /// Baseline probe report JSON; writes per-label differences.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Comma-separated run directories or utilization CSVs. Runs of the same
    /// task set form one model; a model with 3 runs gets an RGB image and an
    /// adjusted R².
    #[arg(long)]
    pub runs: String,
    /// Comma-separated runs averaged into a grayscale overlay.
    #[arg(long)]
    pub overlay: Option<String>,
    /// Task count expected in the overlay.
    #[arg(long, default_value_t = 5)]
    pub overlay_tasks: usize,
    /// Runs per task expected in the overlay.
    #[arg(long, default_value_t = 3)]
    pub overlay_runs: usize,
    /// Pixels per head in images.
    #[arg(long, default_value_t = 16)]
    pub scale: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory searched recursively for run reports.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Markdown output; a CSV is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::dispatch(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<commands::Usage>().is_some() => {
            eprintln!("headlab: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("headlab: error: {e:#}");
            ExitCode::from(2)
        }
    }
}

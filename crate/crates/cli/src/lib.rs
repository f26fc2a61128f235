//! Command-line surface: data generation, training, evaluation, segmentation
//! inspection, attention reporting, and the segmentation sweep.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.
//! Failures print one JSON line on stderr: `{"error": ..., "kind": ...}`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hierseq", version, about = "Hierarchical attention classifier for long irregular event sequences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for everything random in the subcommand.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// JSON config file with flat keys; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory for output artifacts.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Output format for inspection commands.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled event corpus with planted structure.
    GenData(GenDataArgs),
    /// Train the model and write checkpoint, log, and test summary.
    Train(TrainArgs),
    /// Evaluate a checkpoint on an events/labels pair.
    Eval(EvalArgs),
    /// Dump each sequence's segmentation.
    Segment(SegmentArgs),
    /// Per-event-type attention importance report from a checkpoint.
    AttnReport(AttnReportArgs),
    /// Train across fixed group sizes plus adaptive segmentation.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    NoEventAttn,
    NoTemporalAttn,
}

impl From<ModeArg> for hierseq_core::hier_net::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => Self::Full,
            ModeArg::NoEventAttn => Self::NoEventAttn,
            ModeArg::NoTemporalAttn => Self::NoTemporalAttn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegKindArg {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    All,
    Train,
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub n_patients: Option<usize>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Planted rule: order | cooccurrence
    #[arg(long)]
    pub rule: Option<String>,
    /// Co-occurrence window in seconds.
    #[arg(long)]
    pub window_secs: Option<i64>,
    #[arg(long)]
    pub noise_rate: Option<f64>,
    #[arg(long)]
    pub positive_rate: Option<f64>,
}

/// Event/label inputs and cohort filters, shared by the training commands.
#[derive(Debug, Args)]
pub struct DataOpts {
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Collect malformed lines instead of failing.
    #[arg(long)]
    pub skip_bad_lines: bool,
    #[arg(long)]
    pub window_hours: Option<f64>,
    #[arg(long)]
    pub min_span_hours: Option<f64>,
    /// Event-type frequency threshold, per million training events.
    #[arg(long)]
    pub min_event_freq_ppm: Option<f64>,
    #[arg(long)]
    pub split_train: Option<f64>,
    #[arg(long)]
    pub split_val: Option<f64>,
    #[arg(long)]
    pub split_test: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
}

/// Model shape and run mode, shared by the training commands.
#[derive(Debug, Args)]
pub struct ModelOpts {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub segmentation: Option<SegKindArg>,
    /// Max number of groups for adaptive segmentation.
    #[arg(long)]
    pub m: Option<usize>,
    /// Events per group for fixed segmentation.
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub attn_hidden: Option<usize>,
    #[arg(long)]
    pub gru_hidden: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainOpts {
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataOpts,
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub train: TrainOpts,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub skip_bad_lines: bool,
    /// Which rebuilt split to score; `all` scores every surviving sequence.
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitArg,
    /// Also write ROC and PR curve points as CSV.
    #[arg(long)]
    pub curves: bool,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub skip_bad_lines: bool,
    /// Max number of groups (adaptive). Mutually exclusive with --group-size.
    #[arg(long, conflicts_with = "group_size")]
    pub m: Option<usize>,
    /// Fixed events per group; selects the fixed-size splitter.
    #[arg(long)]
    pub group_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AttnReportArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub skip_bad_lines: bool,
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitArg,
    /// Event types with fewer scored occurrences are flagged, not ranked.
    #[arg(long)]
    pub min_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataOpts,
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub train: TrainOpts,
    /// Seeds per grid cell; medians are reported across them.
    #[arg(long)]
    pub sweep_seeds: Option<usize>,
    /// Fixed group sizes to sweep.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

/// Shared global flags after defaulting.
#[derive(Debug, Clone)]
pub struct Global {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub file: config::ConfigFile,
}

/// Dispatches a parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let file = match config::ConfigFile::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    let global = Global {
        seed: cli.seed,
        output_dir: cli.output_dir,
        format: cli.format,
        file,
    };
    let result = match cli.command {
        Command::GenData(args) => commands::gen_data::run(args, &global),
        Command::Train(args) => commands::train::run(args, &global),
        Command::Eval(args) => commands::eval::run(args, &global),
        Command::Segment(args) => commands::segment::run(args, &global),
        Command::AttnReport(args) => commands::attn_report::run(args, &global),
        Command::Sweep(args) => commands::sweep::run(args, &global),
    };
    match result {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> i32 {
    let line = serde_json::json!({ "error": e.message(), "kind": e.kind() });
    eprintln!("{line}");
    e.exit_code()
}

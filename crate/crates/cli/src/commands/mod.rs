//! Subcommand implementations and their shared plumbing.

pub mod attn_report;
pub mod eval;
pub mod gen_data;
pub mod segment;
pub mod sweep;
pub mod train;

use std::path::{Path, PathBuf};

use hierseq_core::checkpoint::{load_checkpoint, Checkpoint};
use hierseq_core::data_pipeline::{
    build_cohort, ingest_with, prepare_with_vocab, read_labels, CohortConfig, CohortDataset,
    CohortError, LabelRecord,
};
use hierseq_core::event_model::{EventSequence, RawSequence};
use hierseq_core::hier_net::Dims;

use crate::config::{pick, require_file};
use crate::error::CliError;
use crate::{DataOpts, Global, ModelOpts, SplitArg, TrainOpts};

/// Inputs validated and parsed: raw sequences joined with their labels.
pub struct LoadedData {
    pub sequences: Vec<RawSequence>,
    pub labels: Vec<LabelRecord>,
}

pub fn load_events(path: &Path, skip_bad: bool) -> Result<Vec<RawSequence>, CliError> {
    let (sequences, report) =
        ingest_with(path, skip_bad).map_err(|e| CliError::usage(e.to_string()))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if skip_bad && !report.bad_lines.is_empty() {
        eprintln!(
            "warning: skipped {} malformed line(s) in {}",
            report.bad_lines.len(),
            path.display()
        );
    }
    Ok(sequences)
}

pub fn load_data(
    events: Option<PathBuf>,
    labels: Option<PathBuf>,
    file_events: Option<PathBuf>,
    file_labels: Option<PathBuf>,
    skip_bad: bool,
) -> Result<LoadedData, CliError> {
    let events_path = require_file(events.or(file_events), "events")?;
    let labels_path = require_file(labels.or(file_labels), "labels")?;
    let sequences = load_events(&events_path, skip_bad)?;
    let labels = read_labels(&labels_path).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(LoadedData { sequences, labels })
}

/// Cohort settings resolved from flags, config file, and defaults.
pub fn resolve_cohort_config(data: &DataOpts, g: &Global) -> CohortConfig {
    let d = CohortConfig::default();
    let split = (
        pick(data.split_train, g.file.split_train, d.split.0),
        pick(data.split_val, g.file.split_val, d.split.1),
        pick(data.split_test, g.file.split_test, d.split.2),
    );
    CohortConfig {
        min_event_freq_ppm: pick(
            data.min_event_freq_ppm,
            g.file.min_event_freq_ppm,
            d.min_event_freq_ppm,
        ),
        min_span_hours: pick(data.min_span_hours, g.file.min_span_hours, d.min_span_hours),
        window_hours: pick(data.window_hours, g.file.window_hours, d.window_hours),
        split,
        split_seed: pick(
            data.split_seed,
            g.file.split_seed,
            pick(g.seed, g.file.seed, 42),
        ),
    }
}

/// Model/run settings resolved from flags, config file, and defaults.
pub fn resolve_model(
    model: &ModelOpts,
    g: &Global,
) -> Result<
    (
        hierseq_core::hier_net::Mode,
        hierseq_core::segmentation::SegmentationChoice,
        Dims,
    ),
    CliError,
> {
    let mode = match model.mode {
        Some(m) => m.into(),
        None => match &g.file.mode {
            Some(s) => crate::config::parse_mode(s)?,
            None => hierseq_core::hier_net::Mode::Full,
        },
    };
    let m = pick(model.m, g.file.m, 32);
    let group_size = pick(model.group_size, g.file.group_size, 8);
    let kind = match model.segmentation {
        Some(crate::SegKindArg::Adaptive) => "adaptive".to_string(),
        Some(crate::SegKindArg::Fixed) => "fixed".to_string(),
        None => g
            .file
            .segmentation
            .clone()
            .unwrap_or_else(|| "adaptive".to_string()),
    };
    let segmentation = crate::config::parse_segmentation(&kind, m, group_size)?;
    let dims = Dims {
        n: pick(model.embed_dim, g.file.embed_dim, Dims::default().n),
        h: pick(model.attn_hidden, g.file.attn_hidden, Dims::default().h),
        s: pick(model.gru_hidden, g.file.gru_hidden, Dims::default().s),
    };
    Ok((mode, segmentation, dims))
}

/// Training hyper-parameters resolved from flags, config file, and defaults.
pub fn resolve_train_config(
    train: &TrainOpts,
    model: &ModelOpts,
    g: &Global,
) -> Result<hierseq_core::training::TrainConfig, CliError> {
    let (mode, segmentation, dims) = resolve_model(model, g)?;
    let mut cfg = hierseq_core::training::TrainConfig {
        dims,
        batch_size: pick(train.batch_size, g.file.batch_size, 32),
        max_epochs: pick(train.max_epochs, g.file.max_epochs, 30),
        patience: pick(train.patience, g.file.patience, 5),
        seed: pick(g.seed, g.file.seed, 42),
        mode,
        segmentation,
        ..hierseq_core::training::TrainConfig::default()
    };
    cfg.adam.learning_rate = pick(train.learning_rate, g.file.learning_rate, 1e-3);
    if cfg.batch_size == 0 {
        return Err(CliError::usage("batch size must be at least 1"));
    }
    if cfg.patience == 0 {
        return Err(CliError::usage("patience must be at least 1"));
    }
    if cfg.adam.learning_rate <= 0.0 {
        return Err(CliError::usage("learning rate must be positive"));
    }
    Ok(cfg)
}

pub fn build_cohort_cli(
    data: LoadedData,
    cfg: &CohortConfig,
) -> Result<CohortDataset, CliError> {
    build_cohort(data.sequences, &data.labels, cfg).map_err(|e| match e {
        CohortError::MissingLabel(_) => CliError::usage(e.to_string()),
        other => CliError::runtime(other.to_string()),
    })
}

pub fn load_checkpoint_cli(path: Option<PathBuf>, g: &Global) -> Result<Checkpoint, CliError> {
    let path = require_file(path.or_else(|| g.file.checkpoint.clone()), "checkpoint")?;
    load_checkpoint(&path).map_err(|e| CliError::usage(e.to_string()))
}

/// Rebuilds evaluation inputs exactly as the checkpoint's training run
/// prepared them, then selects the requested split.
pub fn prepare_eval_sequences(
    checkpoint: &Checkpoint,
    data: LoadedData,
    split: SplitArg,
) -> Result<Vec<EventSequence>, CliError> {
    let cfg = checkpoint.data.to_config();
    let (sequences, splits, _) = prepare_with_vocab(
        data.sequences,
        &data.labels,
        &cfg,
        &checkpoint.vocab,
        checkpoint.data.freq_threshold,
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;
    let chosen: Vec<EventSequence> = match split {
        SplitArg::All => sequences,
        SplitArg::Train => take(sequences, &splits[0]),
        SplitArg::Val => take(sequences, &splits[1]),
        SplitArg::Test => take(sequences, &splits[2]),
    };
    if chosen.is_empty() {
        return Err(CliError::runtime("selected split is empty".to_string()));
    }
    Ok(chosen)
}

fn take(sequences: Vec<EventSequence>, idx: &[usize]) -> Vec<EventSequence> {
    let mut out = Vec::with_capacity(idx.len());
    let mut slots: Vec<Option<EventSequence>> = sequences.into_iter().map(Some).collect();
    for &i in idx {
        out.push(slots[i].take().expect("split indices are unique"));
    }
    out
}

/// Writes a JSON value as one line to a file in the output dir.
pub fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let line = serde_json::to_string(value).expect("serializable");
    std::fs::write(&path, format!("{line}\n")).map_err(crate::error::io_runtime(&path))?;
    Ok(path)
}

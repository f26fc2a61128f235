//! Run configuration: defaults, the optional JSON config file, and the
//! command line, merged in that order (flags win).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use hierseq_core::hier_net::{Dims, Mode};
use hierseq_core::segmentation::SegmentationChoice;

use crate::error::CliError;

/// Flat key/value JSON config file; every field optional, unknown keys
/// rejected.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<String>,
    pub events: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub mode: Option<String>,
    pub segmentation: Option<String>,
    pub m: Option<usize>,
    pub group_size: Option<usize>,
    pub embed_dim: Option<usize>,
    pub attn_hidden: Option<usize>,
    pub gru_hidden: Option<usize>,
    pub window_hours: Option<f64>,
    pub min_span_hours: Option<f64>,
    pub min_event_freq_ppm: Option<f64>,
    pub split_train: Option<f64>,
    pub split_val: Option<f64>,
    pub split_test: Option<f64>,
    pub split_seed: Option<u64>,
    pub n_patients: Option<usize>,
    pub vocab_size: Option<usize>,
    pub rule: Option<String>,
    pub window_secs: Option<i64>,
    pub noise_rate: Option<f64>,
    pub positive_rate: Option<f64>,
    pub min_count: Option<usize>,
    pub sweep_seeds: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub l2: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, CliError> {
    match s.replace('-', "_").as_str() {
        "full" => Ok(Mode::Full),
        "no_event_attn" => Ok(Mode::NoEventAttn),
        "no_temporal_attn" => Ok(Mode::NoTemporalAttn),
        other => Err(CliError::usage(format!(
            "unknown mode {other:?} (expected full, no-event-attn, or no-temporal-attn)"
        ))),
    }
}

/// Resolves the segmentation choice from the merged settings.
pub fn parse_segmentation(
    kind: &str,
    m: usize,
    group_size: usize,
) -> Result<SegmentationChoice, CliError> {
    match kind {
        "adaptive" => Ok(SegmentationChoice::Adaptive { m }),
        "fixed" => Ok(SegmentationChoice::Fixed { group_size }),
        other => Err(CliError::usage(format!(
            "unknown segmentation {other:?} (expected adaptive or fixed)"
        ))),
    }
}

/// Resolution order: command line, then config file, then the default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Ensures a required input file exists before any work starts.
pub fn require_file(path: Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    let path = path.ok_or_else(|| CliError::usage(format!("missing required {what} path")))?;
    if !path.is_file() {
        return Err(CliError::usage(format!(
            "{what} file not found: {}",
            path.display()
        )));
    }
    Ok(path)
}

/// Creates the output directory before anything is written into it.
pub fn ensure_output_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("cannot create output dir {}: {e}", dir.display())))
}

pub fn default_dims() -> Dims {
    Dims::default()
}

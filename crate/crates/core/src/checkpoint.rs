//! Self-describing model checkpoints.
//!
//! One JSON file carries the format version, run mode, segmentation choice,
//! the data-preparation settings needed to rebuild the exact evaluation
//! inputs, the fitted vocabulary and z-statistics, and every parameter
//! tensor. Serialization is fully deterministic, so identical models produce
//! byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_pipeline::CohortConfig;
use crate::event_model::{Vocabulary, ZStats};
use crate::hier_net::{Mode, ModelParams};
use crate::segmentation::SegmentationChoice;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: not a valid checkpoint: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: checkpoint version {found} unsupported (expected {expected})")]
    Version {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("checkpoint is internally inconsistent: {0}")]
    Incompatible(String),
}

/// The data-preparation settings a model was trained with; evaluation
/// reuses them to rebuild identical inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSnapshot {
    pub window_hours: f64,
    pub min_span_hours: f64,
    pub min_event_freq_ppm: f64,
    /// Absolute frequency cutoff that was in effect; >= 1 means events of
    /// out-of-vocabulary types were removed rather than mapped to OOV.
    pub freq_threshold: u64,
    pub split: (f64, f64, f64),
    pub split_seed: u64,
}

impl DataSnapshot {
    pub fn from_config(cfg: &CohortConfig, freq_threshold: u64) -> Self {
        DataSnapshot {
            window_hours: cfg.window_hours,
            min_span_hours: cfg.min_span_hours,
            min_event_freq_ppm: cfg.min_event_freq_ppm,
            freq_threshold,
            split: cfg.split,
            split_seed: cfg.split_seed,
        }
    }

    pub fn to_config(&self) -> CohortConfig {
        CohortConfig {
            min_event_freq_ppm: self.min_event_freq_ppm,
            min_span_hours: self.min_span_hours,
            window_hours: self.window_hours,
            split: self.split,
            split_seed: self.split_seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub mode: Mode,
    pub segmentation: SegmentationChoice,
    pub data: DataSnapshot,
    pub vocab: Vocabulary,
    pub z_stats: ZStats,
    pub params: ModelParams,
}

impl Checkpoint {
    /// Shape and vocabulary consistency; called on load.
    pub fn validate(&self) -> Result<(), CheckpointError> {
        self.params
            .validate_shapes()
            .map_err(CheckpointError::Incompatible)?;
        let t = &self.params.tables;
        if t.type_table.nrows() != self.vocab.n_types() {
            return Err(CheckpointError::Incompatible(format!(
                "type table has {} rows for a vocabulary of {}",
                t.type_table.nrows(),
                self.vocab.n_types()
            )));
        }
        if t.cat_table.nrows() != self.vocab.n_cat_values() {
            return Err(CheckpointError::Incompatible(format!(
                "categorical table has {} rows for {} values",
                t.cat_table.nrows(),
                self.vocab.n_cat_values()
            )));
        }
        if t.num_directions.nrows() != self.vocab.n_num_slots()
            || self.z_stats.mean.len() != self.vocab.n_num_slots()
        {
            return Err(CheckpointError::Incompatible(
                "numerical slot count mismatch between tables, z-stats, and vocabulary"
                    .to_string(),
            ));
        }
        Ok(())
    }
}

/// Writes the checkpoint via a temp file in the same directory, then renames
/// it into place.
pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let to_io = |source: std::io::Error| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    };
    let json = serde_json::to_string(checkpoint).expect("checkpoint serialization");
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, json.as_bytes()).map_err(to_io)?;
    fs::rename(&tmp, path).map_err(to_io)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let checkpoint: Checkpoint =
        serde_json::from_slice(&bytes).map_err(|source| CheckpointError::Parse {
            path: path.display().to_string(),
            source,
        })?;
    if checkpoint.version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            path: path.display().to_string(),
            found: checkpoint.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    checkpoint.validate()?;
    Ok(checkpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::{build_vocab, RawEvent, RawSequence};
    use crate::hier_net::Dims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn fixture() -> Checkpoint {
        let seqs = vec![RawSequence {
            patient_id: "p".into(),
            events: vec![
                RawEvent {
                    time: 0,
                    type_name: "A".into(),
                    cat: BTreeMap::from([("c".to_string(), "x".to_string())]),
                    num: BTreeMap::from([("n".to_string(), 1.0)]),
                },
                RawEvent {
                    time: 5,
                    type_name: "B".into(),
                    cat: BTreeMap::new(),
                    num: BTreeMap::new(),
                },
            ],
        }];
        let vocab = build_vocab(&seqs, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = ModelParams::init(Dims { n: 4, h: 3, s: 5 }, &vocab, &mut rng);
        Checkpoint {
            version: CHECKPOINT_VERSION,
            mode: Mode::Full,
            segmentation: SegmentationChoice::Adaptive { m: 8 },
            data: DataSnapshot {
                window_hours: 24.0,
                min_span_hours: 36.0,
                min_event_freq_ppm: 0.0,
                freq_threshold: 0,
                split: (0.7, 0.1, 0.2),
                split_seed: 42,
            },
            z_stats: ZStats {
                mean: vec![1.0],
                std: vec![0.5],
            },
            vocab,
            params,
        }
    }

    #[test]
    fn save_load_roundtrip_is_exact_and_deterministic() {
        let ck = fixture();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        save_checkpoint(&ck, &p1).unwrap();
        save_checkpoint(&ck, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());

        let loaded = load_checkpoint(&p1).unwrap();
        assert_eq!(loaded.params.flatten(), ck.params.flatten());
        assert_eq!(loaded.vocab, ck.vocab);
        assert_eq!(loaded.z_stats, ck.z_stats);
        // re-saving the loaded checkpoint reproduces the bytes
        let p3 = dir.path().join("c.json");
        save_checkpoint(&loaded, &p3).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p3).unwrap());
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut ck = fixture();
        ck.version = 99;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ck.json");
        save_checkpoint(&ck, &p).unwrap();
        assert!(matches!(
            load_checkpoint(&p).unwrap_err(),
            CheckpointError::Version { found: 99, .. }
        ));
    }

    #[test]
    fn inconsistent_tables_are_rejected() {
        let mut ck = fixture();
        ck.z_stats.mean.push(0.0); // now longer than the slot count
        assert!(matches!(
            ck.validate().unwrap_err(),
            CheckpointError::Incompatible(_)
        ));
    }
}

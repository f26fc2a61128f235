//! Cohort construction: label joining, admission-span and prediction-window
//! filters, patient-level splitting, and train-split-only fitting of the
//! vocabulary and standardization statistics.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{
    build_vocab, encode_event, EventSequence, RawSequence, VocabError, Vocabulary, ZStats,
};

use super::ingest::LabelRecord;

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("patient {0} has events but no label record")]
    MissingLabel(String),
    #[error("cohort is empty after filtering: {0}")]
    Empty(FilterStats),
    #[error("vocabulary fitting failed: {0}")]
    Vocab(#[from] VocabError),
}

/// How many samples/events each filter removed, for diagnostics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct FilterStats {
    pub input_samples: usize,
    /// Admissions whose start-to-outcome span was below the minimum.
    pub span_dropped: usize,
    /// Samples left with no events after the prediction-window truncation.
    pub window_emptied: usize,
    /// Events removed because their type fell under the frequency threshold.
    pub rare_events_removed: usize,
    /// Samples left with no events after rare-event removal.
    pub rare_emptied: usize,
    pub final_samples: usize,
}

impl std::fmt::Display for FilterStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} in, {} dropped by span filter, {} emptied by window truncation, \
             {} rare events removed ({} samples emptied), {} out",
            self.input_samples,
            self.span_dropped,
            self.window_emptied,
            self.rare_events_removed,
            self.rare_emptied,
            self.final_samples
        )
    }
}

/// Cohort filters and splitting. The frequency threshold is a rate per
/// million training events so the absolute cutoff scales with corpus size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortConfig {
    /// Event-type frequency threshold, per million training events.
    pub min_event_freq_ppm: f64,
    /// Admissions spanning less than this (first event to outcome) are dropped.
    pub min_span_hours: f64,
    /// Events within this window before the outcome are excluded from the input.
    pub window_hours: f64,
    /// Train/validation/test fractions; split is by patient.
    pub split: (f64, f64, f64),
    pub split_seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            // 2500 events on a ~20.3M-event corpus
            min_event_freq_ppm: 123.0,
            min_span_hours: 36.0,
            window_hours: 24.0,
            split: (0.7, 0.1, 0.2),
            split_seed: 42,
        }
    }
}

/// Filtered, encoded, split dataset with its fitted preprocessing state.
#[derive(Debug, Clone)]
pub struct CohortDataset {
    pub sequences: Vec<EventSequence>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub vocab: Vocabulary,
    pub z_stats: ZStats,
    /// Absolute event-frequency threshold derived from the ppm rate.
    pub freq_threshold: u64,
    pub filter_stats: FilterStats,
}

/// One labeled sample mid-pipeline. `start_time` is the admission start (the
/// first ingested event), fixed at join time so later event-level filters
/// cannot move it.
#[derive(Debug, Clone)]
pub(crate) struct PendingSample {
    pub patient_id: String,
    pub events: Vec<crate::event_model::RawEvent>,
    pub start_time: i64,
    pub outcome_t: i64,
    pub label: u8,
}

/// Drops samples whose admission span (start to outcome) is under the
/// minimum. Keyed on the stored start time, so this commutes with
/// event-level filters.
pub(crate) fn apply_span_filter(
    samples: Vec<PendingSample>,
    min_span_secs: i64,
    dropped: &mut usize,
) -> Vec<PendingSample> {
    samples
        .into_iter()
        .filter(|s| {
            let keep = s.outcome_t - s.start_time >= min_span_secs;
            if !keep {
                *dropped += 1;
            }
            keep
        })
        .collect()
}

/// Removes events whose type is not in the allowed set. Samples may become
/// empty; the caller decides what to do with those.
pub(crate) fn remove_rare_events(
    samples: Vec<PendingSample>,
    allowed: &HashSet<String>,
    removed: &mut usize,
) -> Vec<PendingSample> {
    samples
        .into_iter()
        .map(|mut s| {
            let before = s.events.len();
            s.events.retain(|e| allowed.contains(&e.type_name));
            *removed += before - s.events.len();
            s
        })
        .collect()
}

/// Joined, filtered, split samples before any vocabulary work.
struct FilteredSamples {
    samples: Vec<PendingSample>,
    /// Split assignment per sample: 0 train, 1 validation, 2 test.
    assignment: Vec<u8>,
    stats: FilterStats,
    window_secs: i64,
}

/// Steps 1-4 of cohort construction: label join, span filter, window
/// truncation, and the seeded patient-level split. Deterministic in the
/// input order and configuration.
fn join_filter_split(
    sequences: Vec<RawSequence>,
    labels: &[LabelRecord],
    cfg: &CohortConfig,
) -> Result<FilteredSamples, CohortError> {
    let label_map: HashMap<&str, &LabelRecord> =
        labels.iter().map(|l| (l.patient.as_str(), l)).collect();

    let mut stats = FilterStats {
        input_samples: sequences.len(),
        ..FilterStats::default()
    };

    let mut samples = Vec::with_capacity(sequences.len());
    for seq in sequences {
        if seq.events.is_empty() {
            continue;
        }
        let rec = label_map
            .get(seq.patient_id.as_str())
            .ok_or_else(|| CohortError::MissingLabel(seq.patient_id.clone()))?;
        samples.push(PendingSample {
            start_time: seq.events[0].time,
            patient_id: seq.patient_id,
            events: seq.events,
            outcome_t: rec.outcome_t,
            label: rec.label,
        });
    }

    let min_span_secs = (cfg.min_span_hours * 3600.0).round() as i64;
    let samples = apply_span_filter(samples, min_span_secs, &mut stats.span_dropped);

    // prediction window: keep events strictly before the cutoff
    let window_secs = (cfg.window_hours * 3600.0).round() as i64;
    let samples: Vec<PendingSample> = samples
        .into_iter()
        .filter_map(|mut s| {
            let cutoff = s.outcome_t - window_secs;
            s.events.retain(|e| e.time < cutoff);
            if s.events.is_empty() {
                stats.window_emptied += 1;
                None
            } else {
                Some(s)
            }
        })
        .collect();

    if samples.is_empty() {
        stats.final_samples = 0;
        return Err(CohortError::Empty(stats));
    }

    // patient-level split
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.split_seed));
    let n = order.len();
    let n_train = ((cfg.split.0 * n as f64).round() as usize).min(n);
    let n_val = ((cfg.split.1 * n as f64).round() as usize).min(n - n_train);
    let mut assignment = vec![2u8; n]; // test
    for &i in &order[..n_train] {
        assignment[i] = 0;
    }
    for &i in &order[n_train..n_train + n_val] {
        assignment[i] = 1;
    }

    Ok(FilteredSamples {
        samples,
        assignment,
        stats,
        window_secs,
    })
}

/// Rare-event removal (active only with a threshold of at least 1) and
/// encoding against a fixed vocabulary. Samples emptied by the removal are
/// dropped from their splits.
#[allow(clippy::type_complexity)]
fn encode_against_vocab(
    mut filtered: FilteredSamples,
    vocab: &Vocabulary,
    freq_threshold: u64,
) -> Result<(Vec<EventSequence>, [Vec<usize>; 3], FilterStats), CohortError> {
    // a threshold of zero disables rare-event removal; unseen types then
    // stay in the sequences and encode to the reserved OOV row
    if freq_threshold >= 1 {
        let allowed: HashSet<String> = vocab.type_names().iter().skip(1).cloned().collect();
        filtered.samples = remove_rare_events(
            filtered.samples,
            &allowed,
            &mut filtered.stats.rare_events_removed,
        );
    }

    let mut stats = filtered.stats;
    let mut kept: Vec<(PendingSample, u8)> = Vec::with_capacity(filtered.samples.len());
    for (s, &a) in filtered.samples.into_iter().zip(&filtered.assignment) {
        if s.events.is_empty() {
            stats.rare_emptied += 1;
        } else {
            kept.push((s, a));
        }
    }
    stats.final_samples = kept.len();
    if kept.is_empty() {
        return Err(CohortError::Empty(stats));
    }

    let mut sequences = Vec::with_capacity(kept.len());
    let mut splits: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (idx, (s, a)) in kept.into_iter().enumerate() {
        let window_end = s.outcome_t - filtered.window_secs;
        let events = s.events.iter().map(|e| encode_event(e, vocab)).collect();
        sequences.push(EventSequence {
            patient_id: s.patient_id,
            events,
            label: s.label,
            window_end,
        });
        splits[a as usize].push(idx);
    }
    Ok((sequences, splits, stats))
}

/// Builds the cohort:
/// 1. joins labels (every sequence must have one),
/// 2. drops admissions spanning under `min_span_hours`,
/// 3. truncates inputs to events strictly before `outcome_t - window_hours`,
/// 4. splits by patient with a seeded shuffle,
/// 5. fits the vocabulary on the training split with the scaled frequency
///    threshold; events of types under the threshold are removed everywhere,
/// 6. encodes all splits and fits z-statistics on the training split.
pub fn build_cohort(
    sequences: Vec<RawSequence>,
    labels: &[LabelRecord],
    cfg: &CohortConfig,
) -> Result<CohortDataset, CohortError> {
    let filtered = join_filter_split(sequences, labels, cfg)?;

    // vocabulary from the training split only
    let train_raw: Vec<RawSequence> = filtered
        .samples
        .iter()
        .zip(&filtered.assignment)
        .filter(|(_, &a)| a == 0)
        .map(|(s, _)| RawSequence {
            patient_id: s.patient_id.clone(),
            events: s.events.clone(),
        })
        .collect();
    let train_event_total: usize = train_raw.iter().map(|s| s.events.len()).sum();
    let freq_threshold =
        (cfg.min_event_freq_ppm * train_event_total as f64 / 1e6).round() as u64;
    let vocab = build_vocab(&train_raw, freq_threshold)?;
    drop(train_raw);

    let (sequences, [train, val, test], stats) =
        encode_against_vocab(filtered, &vocab, freq_threshold)?;

    let z_stats = ZStats::fit(train.iter().map(|&i| &sequences[i]), vocab.n_num_slots());

    Ok(CohortDataset {
        sequences,
        train,
        val,
        test,
        vocab,
        z_stats,
        freq_threshold,
        filter_stats: stats,
    })
}

/// Rebuilds evaluation inputs with an already-fitted vocabulary, running the
/// exact same join/filter/split/encode steps as [`build_cohort`]. Given the
/// same files and configuration this reproduces the training-time splits
/// bit for bit, which is what lets a checkpoint be re-evaluated on "its own"
/// test split.
#[allow(clippy::type_complexity)]
pub fn prepare_with_vocab(
    sequences: Vec<RawSequence>,
    labels: &[LabelRecord],
    cfg: &CohortConfig,
    vocab: &Vocabulary,
    freq_threshold: u64,
) -> Result<(Vec<EventSequence>, [Vec<usize>; 3], FilterStats), CohortError> {
    let filtered = join_filter_split(sequences, labels, cfg)?;
    encode_against_vocab(filtered, vocab, freq_threshold)
}

impl CohortDataset {
    /// Assembles a dataset from already-filtered raw sequences with explicit
    /// split sizes (in that order after a seeded shuffle), fitting the
    /// vocabulary and z-statistics on the training part. No span/window/
    /// frequency filtering is applied.
    pub fn from_splits(
        sequences: Vec<RawSequence>,
        labels: &[LabelRecord],
        n_train: usize,
        n_val: usize,
        split_seed: u64,
    ) -> Result<CohortDataset, CohortError> {
        let cfg = CohortConfig {
            min_event_freq_ppm: 0.0,
            min_span_hours: 0.0,
            window_hours: 0.0,
            split: (0.0, 0.0, 0.0),
            split_seed,
        };
        let n = sequences.len();
        let mut cfg = cfg;
        cfg.split = (
            n_train as f64 / n as f64,
            n_val as f64 / n as f64,
            (n - n_train - n_val) as f64 / n as f64,
        );
        // outcome times in these labels must sit far enough after the last
        // event that a zero-hour window keeps everything
        build_cohort(sequences, labels, &cfg)
    }

    pub fn sequence(&self, idx: usize) -> &EventSequence {
        &self.sequences[idx]
    }
}

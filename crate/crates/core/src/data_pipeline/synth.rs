//! Synthetic labeled event sequences with planted structure.
//!
//! Each patient gets a bursty, irregular timeline: clusters of events seconds
//! apart, separated by gaps of hours. Two label rules can be planted:
//!
//! - `Order`: every patient carries one cluster rich in marker type `mrkA`
//!   and one rich in `mrkB`, hours apart; the label says which came first.
//!   Both classes contain the same event-type multiset distribution, so a
//!   bag-of-words model carries no signal by construction.
//! - `Cooccurrence`: positives contain `critA` and `critB` within a short
//!   window; negatives carry at most scattered single markers far apart.
//!
//! A ground-truth sidecar records the planted critical events per patient so
//! attention reports can be checked against the construction.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::event_model::{RawEvent, RawSequence};

use super::ingest::LabelRecord;

/// Which structure decides the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PlantedRule {
    /// Marker cluster A before marker cluster B <=> label 1.
    Order,
    /// `critA` and `critB` within `window_secs` of each other <=> label 1.
    Cooccurrence { window_secs: i64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n_patients: usize,
    /// Number of background event types.
    pub vocab_size: usize,
    pub rule: PlantedRule,
    /// Probability of flipping each label after applying the rule.
    pub noise_rate: f64,
    /// Target share of positive (pre-noise) labels.
    pub positive_rate: f64,
    /// Background bursts per sequence, inclusive range.
    pub bursts: (usize, usize),
    /// Events per background burst, inclusive range.
    pub burst_len: (usize, usize),
    /// Seconds between events inside a burst, inclusive range.
    pub within_gap_secs: (i64, i64),
    /// Seconds between bursts, inclusive range.
    pub between_gap_secs: (i64, i64),
    /// Events per marker cluster (order rule), inclusive range.
    pub marker_len: (usize, usize),
    /// Share of marker-typed events inside a marker cluster; the rest are
    /// background distractors.
    pub marker_frac: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            seed: 7,
            n_patients: 200,
            vocab_size: 20,
            rule: PlantedRule::Order,
            noise_rate: 0.0,
            positive_rate: 0.5,
            bursts: (12, 15),
            burst_len: (3, 8),
            within_gap_secs: (1, 60),
            between_gap_secs: (7_200, 43_200),
            marker_len: (12, 24),
            marker_frac: 0.12,
        }
    }
}

/// Ground truth for one generated patient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthRecord {
    pub patient: String,
    pub rule: String,
    /// Label before noise was applied.
    pub label_clean: u8,
    /// Label after noise.
    pub label: u8,
    pub critical_types: Vec<String>,
    /// Timestamps of the planted critical events.
    pub critical_event_times: Vec<i64>,
}

fn background_type(vocab_size: usize, rng: &mut ChaCha8Rng) -> String {
    format!("bg{:03}", rng.gen_range(0..vocab_size))
}

fn background_event(spec: &GeneratorSpec, time: i64, rng: &mut ChaCha8Rng) -> RawEvent {
    let type_name = background_type(spec.vocab_size, rng);
    let mut cat = BTreeMap::new();
    let mut num = BTreeMap::new();
    if rng.gen_bool(0.35) {
        let flags = ["low", "mid", "high"];
        cat.insert("flag".to_string(), flags[rng.gen_range(0..3)].to_string());
    }
    if rng.gen_bool(0.35) {
        let normal = Normal::new(0.0, 1.0).unwrap();
        num.insert("level".to_string(), normal.sample(rng));
    }
    RawEvent {
        time,
        type_name,
        cat,
        num,
    }
}

fn range_sample(range: (usize, usize), rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(range.0..=range.1)
}

fn gap_sample(range: (i64, i64), rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(range.0..=range.1)
}

/// Deterministically generates sequences, labels, and the ground-truth
/// sidecar. The same spec always produces identical output.
pub fn generate(spec: &GeneratorSpec) -> (Vec<RawSequence>, Vec<LabelRecord>, Vec<TruthRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sequences = Vec::with_capacity(spec.n_patients);
    let mut labels = Vec::with_capacity(spec.n_patients);
    let mut truths = Vec::with_capacity(spec.n_patients);

    for p in 0..spec.n_patients {
        let patient = format!("p{p:05}");
        let n_bursts = range_sample(spec.bursts, &mut rng);
        // burst start slots along the timeline
        let mut burst_starts = Vec::with_capacity(n_bursts);
        let mut t = rng.gen_range(0..=1_000_000i64);
        for _ in 0..n_bursts {
            burst_starts.push(t);
            t += gap_sample(spec.between_gap_secs, &mut rng);
        }

        let mut events: Vec<RawEvent> = Vec::new();
        let mut burst_ranges = Vec::with_capacity(n_bursts); // (first, last) per burst
        for &start in &burst_starts {
            let len = range_sample(spec.burst_len, &mut rng);
            let mut bt = start;
            let first = bt;
            for i in 0..len {
                if i > 0 {
                    bt += gap_sample(spec.within_gap_secs, &mut rng);
                }
                events.push(background_event(spec, bt, &mut rng));
            }
            burst_ranges.push((first, bt));
        }

        let mut critical_times = Vec::new();
        let (label_clean, critical_types): (u8, Vec<String>) = match spec.rule {
            PlantedRule::Order => {
                // the label is the order of the FIRST marker-A/marker-B
                // cluster pair: one sits in the first quarter, the other
                // just past the first third. Two decoy clusters (one per
                // marker, in random order uncorrelated with the label)
                // follow in the tail, so the decision cannot be read off
                // the end of the sequence alone.
                let early = rng.gen_range(0..(n_bursts / 4).max(1));
                let late_lo = n_bursts / 3;
                let late_hi = (n_bursts / 2).min(n_bursts - 3).max(late_lo);
                let late = rng.gen_range(late_lo..=late_hi);
                let a_first = rng.gen_bool(spec.positive_rate);
                let (a_slot, b_slot) = if a_first { (early, late) } else { (late, early) };

                let mut tail: Vec<usize> = (late + 1..n_bursts).collect();
                tail.shuffle(&mut rng);
                let decoys = [("mrkA", tail[0]), ("mrkB", tail[1])];

                let mut plant_cluster =
                    |marker: &str, slot: usize, record: bool, rng: &mut ChaCha8Rng| {
                        let len = range_sample(spec.marker_len, rng);
                        // a fixed handful of marker events diluted into a
                        // variable-size cluster, never fewer than two
                        let k = ((len as f64 * spec.marker_frac).round() as usize).max(2);
                        let mut is_marker: Vec<bool> = (0..len).map(|i| i < k).collect();
                        is_marker.shuffle(rng);
                        let mut mt = burst_ranges[slot].0;
                        for (i, &is_marker) in is_marker.iter().enumerate() {
                            if i > 0 {
                                mt += gap_sample(spec.within_gap_secs, rng);
                            }
                            if is_marker {
                                let mut e = background_event(spec, mt, rng);
                                e.type_name = marker.to_string();
                                if record {
                                    critical_times.push(mt);
                                }
                                events.push(e);
                            } else {
                                events.push(background_event(spec, mt, rng));
                            }
                        }
                    };
                plant_cluster("mrkA", a_slot, true, &mut rng);
                plant_cluster("mrkB", b_slot, true, &mut rng);
                for (marker, slot) in decoys {
                    plant_cluster(marker, slot, false, &mut rng);
                }
                (
                    u8::from(a_first),
                    vec!["mrkA".to_string(), "mrkB".to_string()],
                )
            }
            PlantedRule::Cooccurrence { window_secs } => {
                let label_clean = u8::from(rng.gen_bool(spec.positive_rate));
                let mut plant = |slot: usize, marker: &str, offset: i64, rng: &mut ChaCha8Rng| {
                    let at = burst_ranges[slot].0 + offset;
                    let mut e = background_event(spec, at, rng);
                    e.type_name = marker.to_string();
                    critical_times.push(at);
                    events.push(e);
                };
                if label_clean == 1 {
                    let slot = rng.gen_range(0..n_bursts);
                    let offset = rng.gen_range(0..=window_secs / 4);
                    plant(slot, "critA", offset, &mut rng);
                    let second = offset + rng.gen_range(0..=window_secs / 4);
                    plant(slot, "critB", second, &mut rng);
                } else {
                    // scattered singles, never inside one window
                    let slot_a = rng.gen_range(0..n_bursts);
                    let mut slot_b = rng.gen_range(0..n_bursts);
                    while n_bursts > 1 && slot_b == slot_a {
                        slot_b = rng.gen_range(0..n_bursts);
                    }
                    if rng.gen_bool(0.5) {
                        plant(slot_a, "critA", 0, &mut rng);
                    }
                    if rng.gen_bool(0.5) && slot_b != slot_a {
                        plant(slot_b, "critB", 0, &mut rng);
                    }
                }
                (
                    label_clean,
                    vec!["critA".to_string(), "critB".to_string()],
                )
            }
        };

        events.sort_by_key(|e| e.time);
        critical_times.sort_unstable();

        let label = if rng.gen_bool(spec.noise_rate) {
            1 - label_clean
        } else {
            label_clean
        };

        let first = events.first().map(|e| e.time).unwrap_or(0);
        let last = events.last().map(|e| e.time).unwrap_or(0);
        // outcome sits a full prediction window past the last event and far
        // enough from the first that the admission-span filter keeps it
        let outcome_t = (last + 25 * 3600).max(first + 37 * 3600);

        sequences.push(RawSequence {
            patient_id: patient.clone(),
            events,
        });
        labels.push(LabelRecord {
            patient: patient.clone(),
            outcome_t,
            label,
        });
        truths.push(TruthRecord {
            patient,
            rule: match spec.rule {
                PlantedRule::Order => "order".to_string(),
                PlantedRule::Cooccurrence { .. } => "cooccurrence".to_string(),
            },
            label_clean,
            label,
            critical_types: critical_types.clone(),
            critical_event_times: critical_times,
        });
    }

    (sequences, labels, truths)
}

/// Writes the ground-truth sidecar as JSON Lines.
pub fn write_truth(truths: &[TruthRecord], path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in truths {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_twice_is_byte_identical() {
        let spec = GeneratorSpec {
            n_patients: 20,
            ..GeneratorSpec::default()
        };
        let a = generate(&spec);
        let b = generate(&spec);
        assert_eq!(
            serde_json::to_string(&(&a.0, &a.1, &a.2)).unwrap(),
            serde_json::to_string(&(&b.0, &b.1, &b.2)).unwrap()
        );
    }

    #[test]
    fn zero_patients_gives_empty_output() {
        let spec = GeneratorSpec {
            n_patients: 0,
            ..GeneratorSpec::default()
        };
        let (seqs, labels, truths) = generate(&spec);
        assert!(seqs.is_empty() && labels.is_empty() && truths.is_empty());
    }

    #[test]
    fn sequences_are_sorted_and_span_the_admission_minimum() {
        let spec = GeneratorSpec {
            n_patients: 30,
            seed: 11,
            ..GeneratorSpec::default()
        };
        let (seqs, labels, _) = generate(&spec);
        for (seq, rec) in seqs.iter().zip(&labels) {
            assert!(seq.events.windows(2).all(|w| w[0].time <= w[1].time));
            let first = seq.events[0].time;
            let last = seq.events.last().unwrap().time;
            assert!(rec.outcome_t - first >= 36 * 3600);
            assert!(rec.outcome_t - last >= 25 * 3600);
        }
    }

    #[test]
    fn gap_distribution_spans_three_orders_of_magnitude() {
        let spec = GeneratorSpec {
            n_patients: 20,
            seed: 5,
            ..GeneratorSpec::default()
        };
        let (seqs, _, _) = generate(&spec);
        let mut min_gap = i64::MAX;
        let mut max_gap = 0i64;
        for seq in &seqs {
            for w in seq.events.windows(2) {
                let gap = w[1].time - w[0].time;
                if gap > 0 {
                    min_gap = min_gap.min(gap);
                    max_gap = max_gap.max(gap);
                }
            }
        }
        assert!(
            max_gap / min_gap >= 1000,
            "gap ratio {max_gap}/{min_gap} under three orders of magnitude"
        );
    }

    #[test]
    fn label_balance_tracks_the_target_across_seeds() {
        for seed in [1, 2, 3] {
            let spec = GeneratorSpec {
                n_patients: 400,
                seed,
                noise_rate: 0.05,
                positive_rate: 0.5,
                ..GeneratorSpec::default()
            };
            let (_, labels, _) = generate(&spec);
            let rate =
                labels.iter().filter(|l| l.label == 1).count() as f64 / labels.len() as f64;
            assert!((rate - 0.5).abs() <= 0.05, "seed {seed}: rate {rate}");
        }
    }

    #[test]
    fn order_rule_keeps_type_presence_independent_of_the_label() {
        let spec = GeneratorSpec {
            n_patients: 200,
            seed: 17,
            noise_rate: 0.0,
            ..GeneratorSpec::default()
        };
        let (seqs, labels, _) = generate(&spec);
        // both marker types appear in every sequence regardless of label
        for (seq, rec) in seqs.iter().zip(&labels) {
            let has = |name: &str| seq.events.iter().any(|e| e.type_name == name);
            assert!(has("mrkA") && has("mrkB"), "patient {}", rec.patient);
        }
    }

    #[test]
    fn cooccurrence_rule_places_markers_per_label() {
        let window = 600;
        let spec = GeneratorSpec {
            n_patients: 150,
            seed: 23,
            noise_rate: 0.0,
            rule: PlantedRule::Cooccurrence {
                window_secs: window,
            },
            ..GeneratorSpec::default()
        };
        let (seqs, _, truths) = generate(&spec);
        for (seq, truth) in seqs.iter().zip(&truths) {
            let times = |name: &str| -> Vec<i64> {
                seq.events
                    .iter()
                    .filter(|e| e.type_name == name)
                    .map(|e| e.time)
                    .collect()
            };
            let a = times("critA");
            let b = times("critB");
            let close = a
                .iter()
                .any(|&ta| b.iter().any(|&tb| (ta - tb).abs() <= window));
            if truth.label_clean == 1 {
                assert!(close, "positive without a co-occurrence: {}", truth.patient);
            } else {
                assert!(!close, "negative with a co-occurrence: {}", truth.patient);
            }
        }
    }
}

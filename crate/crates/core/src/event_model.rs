//! Events, sequences, vocabularies, and the attribute-aware event embedding.
//!
//! An event is embedded as the sum of its type vector and the encodings of
//! its attributes: categorical values look up rows of a value table, and
//! numerical values are z-standardized (training-split statistics) and scale
//! a learned per-slot direction vector.

use std::collections::{BTreeMap, HashMap};

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved row for out-of-vocabulary event types and categorical values.
pub const OOV_INDEX: usize = 0;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("no event type reaches the frequency threshold {threshold} ({observed} distinct types observed)")]
    EmptyVocabulary { threshold: u64, observed: usize },
}

/// One categorical attribute of an encoded event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatAttr {
    /// Categorical slot id (index into [`Vocabulary::cat_slots`]).
    pub slot: usize,
    /// Row id into the categorical value table; `OOV_INDEX` for unseen values.
    pub value_id: usize,
}

/// One numerical attribute of an encoded event. The raw value is kept;
/// standardization happens at embedding time against [`ZStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumAttr {
    /// Numerical slot id (index into [`Vocabulary::num_slots`]).
    pub slot: usize,
    pub value: f64,
    /// Opaque unit tag; not interpreted by the model.
    pub unit: String,
}

/// One timestamped record, encoded against a fitted [`Vocabulary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalEvent {
    /// Index into the event-type vocabulary; `OOV_INDEX` when unknown.
    pub type_id: usize,
    /// Seconds since epoch, non-negative.
    pub time: i64,
    pub cat_attrs: Vec<CatAttr>,
    pub num_attrs: Vec<NumAttr>,
}

/// A labeled episode: the events feeding one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    pub patient_id: String,
    /// Non-empty, sorted non-decreasing by time (stable on ties).
    pub events: Vec<ClinicalEvent>,
    /// Binary outcome.
    pub label: u8,
    /// Upper bound on event times (the episode cutoff), seconds since epoch.
    pub window_end: i64,
}

impl EventSequence {
    /// Event timestamps in sequence order.
    pub fn times(&self) -> Vec<i64> {
        self.events.iter().map(|e| e.time).collect()
    }

    /// Checks the structural invariants (non-empty, sorted, within window).
    pub fn validate(&self) -> Result<(), String> {
        if self.events.is_empty() {
            return Err(format!("sequence {}: no events", self.patient_id));
        }
        if self.events.windows(2).any(|w| w[0].time > w[1].time) {
            return Err(format!("sequence {}: events out of order", self.patient_id));
        }
        if self.events.iter().any(|e| e.time > self.window_end) {
            return Err(format!("sequence {}: event after window end", self.patient_id));
        }
        if self.events.iter().any(|e| e.time < 0) {
            return Err(format!("sequence {}: negative event time", self.patient_id));
        }
        Ok(())
    }
}

/// An event as ingested from disk, before vocabulary encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub time: i64,
    pub type_name: String,
    /// Categorical attributes: slot name -> value.
    #[serde(default)]
    pub cat: BTreeMap<String, String>,
    /// Numerical attributes: slot name -> value.
    #[serde(default)]
    pub num: BTreeMap<String, f64>,
}

/// One patient's raw event stream, time-sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSequence {
    pub patient_id: String,
    pub events: Vec<RawEvent>,
}

/// Index tables mapping names to dense ids. Fitted on the training split
/// only. Id 0 of the type and categorical-value tables is reserved for
/// out-of-vocabulary entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabColumns", into = "VocabColumns")]
pub struct Vocabulary {
    type_names: Vec<String>,
    cat_values: Vec<(String, String)>,
    cat_slots: Vec<String>,
    num_slots: Vec<String>,
    type_index: HashMap<String, usize>,
    cat_value_index: HashMap<(String, String), usize>,
    cat_slot_index: HashMap<String, usize>,
    num_slot_index: HashMap<String, usize>,
}

/// Serialized form of [`Vocabulary`]: just the columns, indices rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabColumns {
    type_names: Vec<String>,
    cat_values: Vec<(String, String)>,
    cat_slots: Vec<String>,
    num_slots: Vec<String>,
}

impl From<VocabColumns> for Vocabulary {
    fn from(c: VocabColumns) -> Self {
        Vocabulary::from_columns(c.type_names, c.cat_values, c.cat_slots, c.num_slots)
    }
}

impl From<Vocabulary> for VocabColumns {
    fn from(v: Vocabulary) -> Self {
        VocabColumns {
            type_names: v.type_names,
            cat_values: v.cat_values,
            cat_slots: v.cat_slots,
            num_slots: v.num_slots,
        }
    }
}

impl Vocabulary {
    fn from_columns(
        type_names: Vec<String>,
        cat_values: Vec<(String, String)>,
        cat_slots: Vec<String>,
        num_slots: Vec<String>,
    ) -> Self {
        let type_index = type_names
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let cat_value_index = cat_values
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, kv)| (kv.clone(), i))
            .collect();
        let cat_slot_index = cat_slots
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let num_slot_index = num_slots
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Vocabulary {
            type_names,
            cat_values,
            cat_slots,
            num_slots,
            type_index,
            cat_value_index,
            cat_slot_index,
            num_slot_index,
        }
    }

    /// Number of type rows, including the reserved OOV row.
    pub fn n_types(&self) -> usize {
        self.type_names.len()
    }

    /// Number of categorical value rows, including the reserved OOV row.
    pub fn n_cat_values(&self) -> usize {
        self.cat_values.len()
    }

    pub fn n_cat_slots(&self) -> usize {
        self.cat_slots.len()
    }

    pub fn n_num_slots(&self) -> usize {
        self.num_slots.len()
    }

    /// Type id for a name; `OOV_INDEX` when the name is not in the vocabulary.
    pub fn type_id(&self, name: &str) -> usize {
        self.type_index.get(name).copied().unwrap_or(OOV_INDEX)
    }

    /// Type id only if the name is in the vocabulary.
    pub fn known_type_id(&self, name: &str) -> Option<usize> {
        self.type_index.get(name).copied()
    }

    pub fn type_name(&self, id: usize) -> &str {
        &self.type_names[id]
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    pub fn cat_value_id(&self, slot: &str, value: &str) -> usize {
        self.cat_value_index
            .get(&(slot.to_string(), value.to_string()))
            .copied()
            .unwrap_or(OOV_INDEX)
    }

    pub fn cat_slot_id(&self, slot: &str) -> Option<usize> {
        self.cat_slot_index.get(slot).copied()
    }

    pub fn num_slot_id(&self, slot: &str) -> Option<usize> {
        self.num_slot_index.get(slot).copied()
    }

    pub fn num_slot_names(&self) -> &[String] {
        &self.num_slots
    }
}

/// Builds the vocabularies from raw sequences.
///
/// Event types with frequency below `min_frequency` are left out; surviving
/// types get ids 1.. in descending-frequency order (ties broken by name).
/// Id 0 is reserved for out-of-vocabulary lookups. Categorical values and
/// attribute slots are indexed from the same corpus without a threshold.
pub fn build_vocab(
    sequences: &[RawSequence],
    min_frequency: u64,
) -> Result<Vocabulary, VocabError> {
    let mut type_freq: BTreeMap<&str, u64> = BTreeMap::new();
    let mut cat_freq: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut cat_slots: BTreeMap<&str, ()> = BTreeMap::new();
    let mut num_slots: BTreeMap<&str, ()> = BTreeMap::new();
    for seq in sequences {
        for e in &seq.events {
            *type_freq.entry(&e.type_name).or_insert(0) += 1;
            for (slot, value) in &e.cat {
                *cat_freq.entry((slot, value)).or_insert(0) += 1;
                cat_slots.entry(slot).or_insert(());
            }
            for slot in e.num.keys() {
                num_slots.entry(slot).or_insert(());
            }
        }
    }

    let observed = type_freq.len();
    let mut kept: Vec<(&str, u64)> = type_freq
        .into_iter()
        .filter(|&(_, f)| f >= min_frequency)
        .collect();
    if kept.is_empty() {
        return Err(VocabError::EmptyVocabulary {
            threshold: min_frequency,
            observed,
        });
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut type_names = vec!["<oov>".to_string()];
    type_names.extend(kept.into_iter().map(|(n, _)| n.to_string()));

    let mut cat_sorted: Vec<((&str, &str), u64)> = cat_freq.into_iter().collect();
    cat_sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut cat_values = vec![("<oov>".to_string(), "<oov>".to_string())];
    cat_values.extend(
        cat_sorted
            .into_iter()
            .map(|((s, v), _)| (s.to_string(), v.to_string())),
    );

    Ok(Vocabulary::from_columns(
        type_names,
        cat_values,
        cat_slots.keys().map(|s| s.to_string()).collect(),
        num_slots.keys().map(|s| s.to_string()).collect(),
    ))
}

/// Encodes a raw event against a fitted vocabulary. Unknown types and
/// categorical values map to the reserved OOV rows; attributes whose slot
/// was never seen during fitting are dropped (there is no table row that
/// could receive them).
pub fn encode_event(raw: &RawEvent, vocab: &Vocabulary) -> ClinicalEvent {
    let cat_attrs = raw
        .cat
        .iter()
        .filter_map(|(slot, value)| {
            vocab.cat_slot_id(slot).map(|sid| CatAttr {
                slot: sid,
                value_id: vocab.cat_value_id(slot, value),
            })
        })
        .collect();
    let num_attrs = raw
        .num
        .iter()
        .filter_map(|(slot, &value)| {
            vocab.num_slot_id(slot).map(|sid| NumAttr {
                slot: sid,
                value,
                unit: String::new(),
            })
        })
        .collect();
    ClinicalEvent {
        type_id: vocab.type_id(&raw.type_name),
        time: raw.time,
        cat_attrs,
        num_attrs,
    }
}

/// Per-slot mean and standard deviation of numerical attribute values,
/// fitted on the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZStats {
    /// Stats for a corpus with no numerical slots.
    pub fn empty() -> Self {
        ZStats {
            mean: Vec::new(),
            std: Vec::new(),
        }
    }

    /// Fits per-slot population statistics over the given sequences.
    /// Slots with no observations get mean 0 and std 0.
    pub fn fit<'a>(sequences: impl IntoIterator<Item = &'a EventSequence>, n_slots: usize) -> Self {
        let mut sum = vec![0.0; n_slots];
        let mut sum_sq = vec![0.0; n_slots];
        let mut count = vec![0u64; n_slots];
        for seq in sequences {
            for e in &seq.events {
                for a in &e.num_attrs {
                    if a.slot < n_slots {
                        sum[a.slot] += a.value;
                        sum_sq[a.slot] += a.value * a.value;
                        count[a.slot] += 1;
                    }
                }
            }
        }
        let mut mean = vec![0.0; n_slots];
        let mut std = vec![0.0; n_slots];
        for i in 0..n_slots {
            if count[i] > 0 {
                let n = count[i] as f64;
                mean[i] = sum[i] / n;
                let var = (sum_sq[i] / n - mean[i] * mean[i]).max(0.0);
                std[i] = var.sqrt();
            }
        }
        ZStats { mean, std }
    }

    /// Standardized value for a slot; a zero std forces the result to 0.
    pub fn standardize(&self, slot: usize, value: f64) -> f64 {
        if slot >= self.std.len() || self.std[slot] == 0.0 {
            0.0
        } else {
            (value - self.mean[slot]) / self.std[slot]
        }
    }
}

/// The learnable embedding tables. Row 0 of the type and categorical value
/// tables is the OOV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTables {
    /// `[n_types x N]`
    pub type_table: Array2<f64>,
    /// `[n_cat_values x N]`
    pub cat_table: Array2<f64>,
    /// `[n_num_slots x N]`
    pub num_directions: Array2<f64>,
}

impl EmbeddingTables {
    /// Embedding dimension N.
    pub fn n(&self) -> usize {
        self.type_table.ncols()
    }

    /// Uniform init in [-0.05, 0.05] from the given generator.
    pub fn init(vocab: &Vocabulary, n: usize, rng: &mut impl Rng) -> Self {
        let mut uniform = |rows: usize| {
            Array2::from_shape_simple_fn((rows, n), || rng.gen_range(-0.05..=0.05))
        };
        let type_table = uniform(vocab.n_types());
        let cat_table = uniform(vocab.n_cat_values());
        let num_directions = uniform(vocab.n_num_slots());
        EmbeddingTables {
            type_table,
            cat_table,
            num_directions,
        }
    }

    pub fn zeros(n_types: usize, n_cat_values: usize, n_num_slots: usize, n: usize) -> Self {
        EmbeddingTables {
            type_table: Array2::zeros((n_types, n)),
            cat_table: Array2::zeros((n_cat_values, n)),
            num_directions: Array2::zeros((n_num_slots, n)),
        }
    }
}

/// Embeds one event: type vector plus the sum of per-attribute contributions.
///
/// Categorical attributes add their value row; numerical attributes add the
/// standardized value times the slot's direction vector. Ids out of table
/// range fall back to the OOV row (type/cat) or contribute nothing (num).
pub fn embed_event(e: &ClinicalEvent, tables: &EmbeddingTables, z: &ZStats) -> Array1<f64> {
    let type_row = if e.type_id < tables.type_table.nrows() {
        e.type_id
    } else {
        OOV_INDEX
    };
    let mut v = tables.type_table.row(type_row).to_owned();
    for a in &e.cat_attrs {
        let row = if a.value_id < tables.cat_table.nrows() {
            a.value_id
        } else {
            OOV_INDEX
        };
        v += &tables.cat_table.row(row);
    }
    for a in &e.num_attrs {
        if a.slot < tables.num_directions.nrows() {
            let scale = z.standardize(a.slot, a.value);
            v.scaled_add(scale, &tables.num_directions.row(a.slot));
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn raw(type_name: &str, time: i64) -> RawEvent {
        RawEvent {
            time,
            type_name: type_name.to_string(),
            cat: BTreeMap::new(),
            num: BTreeMap::new(),
        }
    }

    fn corpus(counts: &[(&str, usize)]) -> Vec<RawSequence> {
        let mut events = Vec::new();
        for &(name, n) in counts {
            for i in 0..n {
                events.push(raw(name, i as i64));
            }
        }
        vec![RawSequence {
            patient_id: "p0".to_string(),
            events,
        }]
    }

    #[test]
    fn vocab_threshold_keeps_frequent_types() {
        let seqs = corpus(&[("A", 3000), ("B", 100)]);
        let vocab = build_vocab(&seqs, 2500).unwrap();
        assert_eq!(vocab.type_names(), &["<oov>".to_string(), "A".to_string()]);
        assert_eq!(vocab.type_id("A"), 1);
        assert_eq!(vocab.type_id("B"), OOV_INDEX);
    }

    #[test]
    fn vocab_zero_threshold_keeps_everything() {
        let seqs = corpus(&[("A", 3), ("B", 1), ("C", 2)]);
        let vocab = build_vocab(&seqs, 0).unwrap();
        assert_eq!(vocab.n_types(), 4);
        for name in ["A", "B", "C"] {
            assert_ne!(vocab.type_id(name), OOV_INDEX);
        }
    }

    #[test]
    fn vocab_orders_by_frequency_then_name() {
        // Independent oracle: sort (freq desc, name asc) by hand.
        let seqs = corpus(&[("zeta", 5), ("echo", 5), ("mike", 9)]);
        let vocab = build_vocab(&seqs, 0).unwrap();
        let expected = ["<oov>", "mike", "echo", "zeta"].map(String::from);
        assert_eq!(vocab.type_names(), expected.as_slice());
    }

    #[test]
    fn vocab_empty_after_threshold_is_an_error() {
        let seqs = corpus(&[("A", 3)]);
        let err = build_vocab(&seqs, 10).unwrap_err();
        assert!(matches!(err, VocabError::EmptyVocabulary { observed: 1, .. }));
    }

    fn tiny_tables(n: usize, rng: &mut ChaCha8Rng) -> (Vocabulary, EmbeddingTables) {
        let mut e1 = raw("A", 0);
        e1.cat.insert("color".into(), "red".into());
        e1.num.insert("level".into(), 2.0);
        let mut e2 = raw("B", 1);
        e2.cat.insert("color".into(), "blue".into());
        e2.num.insert("level".into(), 4.0);
        let seqs = vec![RawSequence {
            patient_id: "p".into(),
            events: vec![e1, e2],
        }];
        let vocab = build_vocab(&seqs, 0).unwrap();
        let tables = EmbeddingTables::init(&vocab, n, rng);
        (vocab, tables)
    }

    #[test]
    fn embed_event_without_attributes_is_the_type_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (vocab, tables) = tiny_tables(4, &mut rng);
        let e = encode_event(&raw("A", 0), &vocab);
        let v = embed_event(&e, &tables, &ZStats::empty());
        assert_eq!(v, tables.type_table.row(vocab.type_id("A")).to_owned());
    }

    #[test]
    fn embed_event_zero_tables_gives_zero_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (vocab, _) = tiny_tables(4, &mut rng);
        let tables = EmbeddingTables::zeros(vocab.n_types(), vocab.n_cat_values(), 1, 4);
        let mut r = raw("A", 0);
        r.cat.insert("color".into(), "red".into());
        r.num.insert("level".into(), 3.0);
        let e = encode_event(&r, &vocab);
        let z = ZStats {
            mean: vec![0.0],
            std: vec![1.0],
        };
        let v = embed_event(&e, &tables, &z);
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn embed_event_is_linear_in_standardized_numeric_value() {
        // Oracle: direct evaluation of the formula says the numeric
        // contribution is scale * direction, so v(2z) - v(0) = 2 (v(z) - v(0)).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (vocab, tables) = tiny_tables(5, &mut rng);
        let z = ZStats {
            mean: vec![0.0],
            std: vec![1.0],
        };
        let make = |value: f64| {
            let mut r = raw("A", 0);
            r.num.insert("level".into(), value);
            embed_event(&encode_event(&r, &vocab), &tables, &z)
        };
        let v0 = make(0.0);
        let v1 = make(1.5);
        let v2 = make(3.0);
        let lhs = &v2 - &v0;
        let rhs = (&v1 - &v0) * 2.0;
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_event_is_additive_over_attributes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (vocab, tables) = tiny_tables(6, &mut rng);
        let z = ZStats {
            mean: vec![1.0],
            std: vec![2.0],
        };
        let mut full = raw("B", 0);
        full.cat.insert("color".into(), "blue".into());
        full.num.insert("level".into(), 7.0);
        let v_full = embed_event(&encode_event(&full, &vocab), &tables, &z);

        let v_type = embed_event(&encode_event(&raw("B", 0), &vocab), &tables, &z);
        let mut only_cat = raw("B", 0);
        only_cat.cat.insert("color".into(), "blue".into());
        let v_cat = embed_event(&encode_event(&only_cat, &vocab), &tables, &z);
        let mut only_num = raw("B", 0);
        only_num.num.insert("level".into(), 7.0);
        let v_num = embed_event(&encode_event(&only_num, &vocab), &tables, &z);

        let recomposed = &v_type + &(&v_cat - &v_type) + &(&v_num - &v_type);
        for (a, b) in v_full.iter().zip(recomposed.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_event_ignores_attribute_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (vocab, tables) = tiny_tables(4, &mut rng);
        let z = ZStats {
            mean: vec![0.5],
            std: vec![1.5],
        };
        let mut r = raw("A", 0);
        r.cat.insert("color".into(), "red".into());
        r.num.insert("level".into(), 2.5);
        let e = encode_event(&r, &vocab);
        let mut reversed = e.clone();
        reversed.cat_attrs.reverse();
        reversed.num_attrs.reverse();
        assert_eq!(
            embed_event(&e, &tables, &z),
            embed_event(&reversed, &tables, &z)
        );
    }

    #[test]
    fn oov_type_and_value_embed_via_row_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (vocab, tables) = tiny_tables(4, &mut rng);
        let mut r = raw("never-seen", 0);
        r.cat.insert("color".into(), "chartreuse".into());
        let e = encode_event(&r, &vocab);
        assert_eq!(e.type_id, OOV_INDEX);
        assert_eq!(e.cat_attrs[0].value_id, OOV_INDEX);
        let v = embed_event(&e, &tables, &ZStats::empty());
        assert!(v.iter().all(|x| x.is_finite()));
        let expected = &tables.type_table.row(0).to_owned() + &tables.cat_table.row(0);
        assert_eq!(v, expected);
    }

    #[test]
    fn zero_std_forces_standardized_value_to_zero() {
        let z = ZStats {
            mean: vec![5.0],
            std: vec![0.0],
        };
        assert_eq!(z.standardize(0, 123.0), 0.0);
    }

    #[test]
    fn zstats_fit_matches_hand_computation() {
        let seq = EventSequence {
            patient_id: "p".into(),
            events: vec![
                ClinicalEvent {
                    type_id: 1,
                    time: 0,
                    cat_attrs: vec![],
                    num_attrs: vec![NumAttr {
                        slot: 0,
                        value: 2.0,
                        unit: String::new(),
                    }],
                },
                ClinicalEvent {
                    type_id: 1,
                    time: 1,
                    cat_attrs: vec![],
                    num_attrs: vec![NumAttr {
                        slot: 0,
                        value: 4.0,
                        unit: String::new(),
                    }],
                },
            ],
            label: 0,
            window_end: 10,
        };
        let z = ZStats::fit([&seq], 1);
        assert!((z.mean[0] - 3.0).abs() < 1e-12);
        assert!((z.std[0] - 1.0).abs() < 1e-12);
        assert!((z.standardize(0, 4.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_slots_are_dropped_at_encode_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (vocab, _) = tiny_tables(4, &mut rng);
        let mut r = raw("A", 0);
        r.cat.insert("shape".into(), "round".into());
        r.num.insert("pressure".into(), 80.0);
        let e = encode_event(&r, &vocab);
        assert!(e.cat_attrs.is_empty());
        assert!(e.num_attrs.is_empty());
    }

    #[test]
    fn sequence_validation_catches_violations() {
        let ev = |t: i64| ClinicalEvent {
            type_id: 0,
            time: t,
            cat_attrs: vec![],
            num_attrs: vec![],
        };
        let good = EventSequence {
            patient_id: "p".into(),
            events: vec![ev(0), ev(5)],
            label: 1,
            window_end: 5,
        };
        assert!(good.validate().is_ok());
        let out_of_order = EventSequence {
            events: vec![ev(5), ev(0)],
            ..good.clone()
        };
        assert!(out_of_order.validate().is_err());
        let empty = EventSequence {
            events: vec![],
            ..good.clone()
        };
        assert!(empty.validate().is_err());
        let beyond_window = EventSequence {
            events: vec![ev(0), ev(6)],
            ..good
        };
        assert!(beyond_window.validate().is_err());
    }
}

//! Data plumbing: JSONL ingestion, cohort construction, the synthetic
//! sequence generator, and the bag-of-words logistic-regression baseline.

mod baseline;
mod cohort;
mod ingest;
mod synth;

pub use baseline::{
    bow_vectorize, fit_logistic, train_lr_baseline, LogisticConfig, LogisticFit, LrBaselineReport,
};
pub use cohort::{
    build_cohort, prepare_with_vocab, CohortConfig, CohortDataset, CohortError, FilterStats,
};
pub use ingest::{
    export_events, ingest, ingest_with, read_labels, write_labels, BadLine, IngestError,
    IngestReport, LabelRecord,
};
pub use synth::{generate, write_truth, GeneratorSpec, PlantedRule, TruthRecord};

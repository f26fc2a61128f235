//! Classifier for long, irregularly timed event sequences.
//!
//! The engine segments each sequence into at most `M` contiguous time groups
//! (minimizing the maximum within-group time span), pools each group with an
//! event-level attention conditioned on the recurrent state, runs a GRU over
//! the group vectors, pools the GRU outputs with a temporal attention, and
//! predicts a binary outcome from the pooled sequence vector. Training is
//! plain reverse-mode backpropagation with Adam, mini-batches, and early
//! stopping on validation AUC.
//!
//! Modules:
//! - [`event_model`]: events, vocabularies, and the attribute-aware embedding
//! - [`segmentation`]: minimax adaptive splitter plus the fixed-size ablation
//! - [`hier_net`]: forward pass, attention mechanisms, GRU, loss
//! - [`training`]: backward pass, Adam, the training loop
//! - [`metrics`]: ROC AUC and average precision
//! - [`data_pipeline`]: ingestion, cohort filters, synthetic data, LR baseline
//! - [`checkpoint`]: self-describing model checkpoint files

pub mod checkpoint;
pub mod data_pipeline;
pub mod event_model;
pub mod hier_net;
pub mod metrics;
pub mod segmentation;
pub mod training;

pub use checkpoint::Checkpoint;
pub use event_model::{
    CatAttr, ClinicalEvent, EmbeddingTables, EventSequence, NumAttr, RawEvent, RawSequence,
    Vocabulary, ZStats,
};
pub use hier_net::{Dims, ForwardTrace, Mode, ModelParams};
pub use segmentation::{Segmentation, SegmentationChoice};
pub use training::{EpochLog, TrainConfig, Gradients};

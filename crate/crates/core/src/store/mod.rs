//! Data model and versioned persistence: iteration datasets, catalyst sets,
//! iteration manifests and merged training corpora.
//!
//! Everything is canonical UTF-8 JSONL (or one JSON document for
//! manifests) with a fixed key order and no floats, so digests are stable
//! across platforms.

mod catalyst;
mod corpus;
mod dataset;
mod error;
mod manifest;
mod sample;

pub use catalyst::{load_catalyst, write_catalyst, CatalystExample, CatalystSet};
pub use corpus::{merge_training_corpus, RecordSource, TrainingCorpus, TrainingRecord};
pub use dataset::{load_dataset, write_dataset, IterationDataset};
pub use error::StoreError;
pub use manifest::{load_manifest, verify_chain, walk_to_root, write_manifest, ChainError, IterationManifest};
pub use sample::{InstructionSample, Provenance};

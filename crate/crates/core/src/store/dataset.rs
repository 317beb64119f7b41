use std::collections::HashSet;
use std::path::Path;

use crate::digest::digest_bytes;
use crate::jsonl::{self, Record, SchemaError};

use super::error::StoreError;
use super::sample::{InstructionSample, Provenance};

const DATASET_FIELDS: [&str; 6] = [
    "id",
    "instruction",
    "rationale",
    "answer",
    "iteration",
    "provenance",
];

/// The instruction-tuning dataset of one iteration.
///
/// Immutable once constructed; the digest always matches the content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationDataset {
    iteration: u32,
    samples: Vec<InstructionSample>,
    digest: String,
}

impl IterationDataset {
    /// Validates `samples` against `iteration` and computes the digest.
    ///
    /// Seed samples (iteration 0) without a rationale take the answer as
    /// their rationale.
    pub fn new(iteration: u32, mut samples: Vec<InstructionSample>) -> Result<Self, StoreError> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &mut samples {
            validate_sample(s, iteration)?;
            if !seen.insert(s.id.clone()) {
                return Err(StoreError::DuplicateId {
                    id: s.id.clone(),
                    line: None,
                });
            }
            if s.rationale.is_empty() {
                s.rationale = s.answer.clone();
            }
        }
        let digest = digest_bytes(&jsonl::to_jsonl(&samples));
        Ok(Self {
            iteration,
            samples,
            digest,
        })
    }

    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn samples(&self) -> &[InstructionSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn get(&self, id: &str) -> Option<&InstructionSample> {
        self.samples.iter().find(|s| s.id == id)
    }

    /// Canonical serialization: one compact JSON object per line in the
    /// fixed key order, each line newline-terminated.
    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        jsonl::to_jsonl(&self.samples)
    }

    pub fn from_jsonl_str(text: &str, path: &Path) -> Result<Self, StoreError> {
        let records = jsonl::parse_records(text).map_err(|e| StoreError::schema(path, e))?;
        let mut samples = Vec::with_capacity(records.len());
        let mut seen = HashSet::with_capacity(records.len());
        let mut iteration = None;
        for rec in &records {
            let sample = sample_from_record(rec).map_err(|e| StoreError::schema(path, e))?;
            let expected = *iteration.get_or_insert(sample.iteration);
            if sample.iteration != expected {
                return Err(StoreError::schema(
                    path,
                    rec.field_error(
                        "iteration",
                        format!("expected {expected} like the rest of the dataset"),
                    ),
                ));
            }
            if sample.rationale.is_empty() && sample.iteration != 0 {
                return Err(StoreError::schema(
                    path,
                    rec.field_error("rationale", "empty rationale outside iteration 0"),
                ));
            }
            if !seen.insert(sample.id.clone()) {
                return Err(StoreError::DuplicateId {
                    id: sample.id,
                    line: Some(rec.line),
                });
            }
            samples.push(sample);
        }
        Self::new(iteration.unwrap_or(0), samples)
    }
}

fn validate_sample(s: &InstructionSample, iteration: u32) -> Result<(), StoreError> {
    if s.id.is_empty() {
        return Err(StoreError::invalid("", "id must be nonempty"));
    }
    if s.instruction.is_empty() {
        return Err(StoreError::invalid(&s.id, "instruction must be nonempty"));
    }
    if s.answer.is_empty() {
        return Err(StoreError::invalid(&s.id, "answer must be nonempty"));
    }
    if s.iteration != iteration {
        return Err(StoreError::invalid(
            &s.id,
            format!("iteration {} in a dataset of iteration {iteration}", s.iteration),
        ));
    }
    if s.rationale.is_empty() && iteration != 0 {
        return Err(StoreError::invalid(&s.id, "empty rationale outside iteration 0"));
    }
    Ok(())
}

fn sample_from_record(rec: &Record) -> Result<InstructionSample, SchemaError> {
    rec.deny_unknown(&DATASET_FIELDS)?;
    let iteration = rec.u64("iteration")?;
    let iteration = u32::try_from(iteration)
        .map_err(|_| rec.field_error("iteration", "out of range"))?;
    let provenance = rec.str("provenance")?;
    let provenance = Provenance::parse(&provenance).ok_or_else(|| {
        rec.field_error(
            "provenance",
            format!("unknown provenance `{provenance}` (seed|expansion-selected|incumbent-retained)"),
        )
    })?;
    Ok(InstructionSample {
        id: rec.nonempty_str("id")?,
        instruction: rec.nonempty_str("instruction")?,
        rationale: rec.opt_str("rationale")?.unwrap_or_default(),
        answer: rec.nonempty_str("answer")?,
        iteration,
        provenance,
    })
}

/// Loads and validates a dataset JSONL file.
///
/// The iteration is taken from the records; an empty file is an empty
/// iteration-0 dataset.
pub fn load_dataset(path: &Path) -> Result<IterationDataset, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    IterationDataset::from_jsonl_str(&text, path)
}

/// Writes the canonical serialization and returns the digest. Existing
/// files are never overwritten with different content.
pub fn write_dataset(dataset: &IterationDataset, path: &Path) -> Result<String, StoreError> {
    jsonl::write_once(path, &dataset.to_jsonl_bytes()).map_err(|e| StoreError::io(path, e))?;
    Ok(dataset.digest().to_string())
}

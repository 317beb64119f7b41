use serde::{Deserialize, Serialize};

use crate::catalyst::build_meta_prompt;
use crate::digest::digest_bytes;
use crate::jsonl;

use super::catalyst::CatalystSet;
use super::dataset::IterationDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordSource {
    Dataset,
    Catalyst,
}

/// One prompt/response pair handed to the trainer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub id: String,
    pub source: RecordSource,
    pub system: String,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingCorpus {
    pub records: Vec<TrainingRecord>,
}

impl TrainingCorpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        jsonl::to_jsonl(&self.records)
    }

    pub fn digest(&self) -> String {
        digest_bytes(&self.to_jsonl_bytes())
    }
}

/// Dataset samples render as instruction -> rationale + answer; catalyst
/// examples render as the meta-reasoning prompt over (instruction, original
/// rationale) -> enriched rationale. Dataset records come first.
pub fn merge_training_corpus(dataset: &IterationDataset, catalyst: &CatalystSet) -> TrainingCorpus {
    let mut records = Vec::with_capacity(dataset.len() + catalyst.len());
    for s in dataset.samples() {
        let response = if s.rationale == s.answer {
            s.answer.clone()
        } else {
            format!("{}\n\n{}", s.rationale, s.answer)
        };
        records.push(TrainingRecord {
            id: s.id.clone(),
            source: RecordSource::Dataset,
            system: String::new(),
            prompt: s.instruction.clone(),
            response,
        });
    }
    for ex in catalyst.examples() {
        let prompt = build_meta_prompt(&ex.instruction, &ex.rationale_before);
        records.push(TrainingRecord {
            id: ex.id.clone(),
            source: RecordSource::Catalyst,
            system: prompt.system,
            prompt: prompt.user,
            response: ex.rationale_enriched.clone(),
        });
    }
    TrainingCorpus { records }
}

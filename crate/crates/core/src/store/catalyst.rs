use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::digest::digest_bytes;
use crate::grammar::{is_pure_thoughts_block, parse_rationale};
use crate::jsonl::{self, Record, SchemaError};

use super::error::StoreError;

const CATALYST_FIELDS: [&str; 4] = ["id", "instruction", "rationale_before", "rationale_enriched"];

/// A demonstration of turning an original rationale into an enriched
/// `<thoughts>` rationale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalystExample {
    pub id: String,
    pub instruction: String,
    pub rationale_before: String,
    pub rationale_enriched: String,
}

impl CatalystExample {
    fn validate(&self) -> Result<(), StoreError> {
        if self.id.is_empty() {
            return Err(StoreError::invalid("", "id must be nonempty"));
        }
        if self.instruction.is_empty() {
            return Err(StoreError::invalid(&self.id, "instruction must be nonempty"));
        }
        if let Err(e) = parse_rationale(&self.rationale_enriched) {
            return Err(StoreError::invalid(
                &self.id,
                format!("rationale_enriched: {} ({e})", e.class()),
            ));
        }
        if !is_pure_thoughts_block(&self.rationale_enriched) {
            return Err(StoreError::invalid(
                &self.id,
                "rationale_enriched must end with </thoughts>",
            ));
        }
        Ok(())
    }
}

/// The fixed set of catalyst demonstrations mixed into every training
/// corpus of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalystSet {
    examples: Vec<CatalystExample>,
    digest: String,
}

impl CatalystSet {
    pub fn new(examples: Vec<CatalystExample>) -> Result<Self, StoreError> {
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            ex.validate()?;
            if !seen.insert(ex.id.as_str()) {
                return Err(StoreError::DuplicateId {
                    id: ex.id.clone(),
                    line: None,
                });
            }
        }
        let digest = digest_bytes(&jsonl::to_jsonl(&examples));
        Ok(Self { examples, digest })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new()).expect("empty set is valid")
    }

    pub fn examples(&self) -> &[CatalystExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        jsonl::to_jsonl(&self.examples)
    }

    pub fn from_jsonl_str(text: &str, path: &Path) -> Result<Self, StoreError> {
        let records = jsonl::parse_records(text).map_err(|e| StoreError::schema(path, e))?;
        let mut examples = Vec::with_capacity(records.len());
        let mut seen = HashSet::new();
        for rec in &records {
            let ex = example_from_record(rec).map_err(|e| StoreError::schema(path, e))?;
            if !seen.insert(ex.id.clone()) {
                return Err(StoreError::DuplicateId {
                    id: ex.id,
                    line: Some(rec.line),
                });
            }
            if let Err(e) = ex.validate() {
                let reason = match e {
                    StoreError::InvalidRecord { reason, .. } => reason,
                    other => other.to_string(),
                };
                return Err(StoreError::schema(
                    path,
                    rec.field_error("rationale_enriched", reason),
                ));
            }
            examples.push(ex);
        }
        Self::new(examples)
    }
}

fn example_from_record(rec: &Record) -> Result<CatalystExample, SchemaError> {
    rec.deny_unknown(&CATALYST_FIELDS)?;
    Ok(CatalystExample {
        id: rec.nonempty_str("id")?,
        instruction: rec.nonempty_str("instruction")?,
        rationale_before: rec.str("rationale_before")?,
        rationale_enriched: rec.str("rationale_enriched")?,
    })
}

pub fn load_catalyst(path: &Path) -> Result<CatalystSet, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    CatalystSet::from_jsonl_str(&text, path)
}

pub fn write_catalyst(set: &CatalystSet, path: &Path) -> Result<String, StoreError> {
    jsonl::write_once(path, &set.to_jsonl_bytes()).map_err(|e| StoreError::io(path, e))?;
    Ok(set.digest().to_string())
}

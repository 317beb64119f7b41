use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::digest::digest_json;
use crate::jsonl;
use crate::selection::SelectorKind;

use super::error::StoreError;

/// Hash-linked record binding one iteration's dataset, catalyst, model
/// references and configuration.
///
/// `trained_model_ref` stays empty until the trainer hook has produced the
/// model for this iteration's dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationManifest {
    pub iteration: u32,
    pub base_model_ref: String,
    pub trained_model_ref: String,
    pub dataset_digest: String,
    pub catalyst_digest: String,
    pub selector: SelectorKind,
    pub config_digest: String,
    pub parent_manifest_digest: String,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    #[serde(flatten)]
    manifest: &'a IterationManifest,
    digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("chain is empty")]
    Empty,
    #[error("manifest at position {position} has iteration {found}")]
    IterationGap { position: usize, found: u32 },
    #[error("iteration {iteration}: parent digest {found:?} does not match {expected:?}")]
    BrokenLink {
        iteration: u32,
        expected: String,
        found: String,
    },
    #[error("iteration {iteration}: base model `{found}` differs from `{expected}`")]
    BaseModelChanged {
        iteration: u32,
        expected: String,
        found: String,
    },
}

impl IterationManifest {
    /// Digest of the manifest's canonical JSON, excluding the digest itself.
    pub fn digest(&self) -> String {
        digest_json(self)
    }

    /// Pretty JSON with a trailing `digest` field and newline.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let file = ManifestFile {
            manifest: self,
            digest: self.digest(),
        };
        let mut out = serde_json::to_vec_pretty(&file).expect("manifest serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json_slice(bytes: &[u8], path: &Path) -> Result<Self, StoreError> {
        let schema = |msg: String, field: Option<&str>| {
            StoreError::schema(path, jsonl::SchemaError::new(1, field, msg))
        };
        let mut value: Value =
            serde_json::from_slice(bytes).map_err(|e| schema(format!("invalid JSON: {e}"), None))?;
        let stored = match value.as_object_mut().and_then(|o| o.remove("digest")) {
            Some(Value::String(s)) => s,
            _ => return Err(schema("missing string field".into(), Some("digest"))),
        };
        let manifest: IterationManifest =
            serde_json::from_value(value).map_err(|e| schema(e.to_string(), None))?;
        let actual = manifest.digest();
        if actual != stored {
            return Err(StoreError::DigestMismatch {
                expected: stored,
                actual,
            });
        }
        Ok(manifest)
    }
}

pub fn load_manifest(path: &Path) -> Result<IterationManifest, StoreError> {
    let bytes = std::fs::read(path).map_err(|e| StoreError::io(path, e))?;
    IterationManifest::from_json_slice(&bytes, path)
}

/// Writes (or replaces) a manifest file atomically.
pub fn write_manifest(manifest: &IterationManifest, path: &Path) -> Result<String, StoreError> {
    jsonl::write_atomic(path, &manifest.to_json_bytes()).map_err(|e| StoreError::io(path, e))?;
    Ok(manifest.digest())
}

/// Checks that `chain[t]` is iteration `t`, links to `chain[t-1]`, and keeps
/// the base model of `chain[0]`.
pub fn verify_chain(chain: &[IterationManifest]) -> Result<(), ChainError> {
    let first = chain.first().ok_or(ChainError::Empty)?;
    for (position, m) in chain.iter().enumerate() {
        if m.iteration as usize != position {
            return Err(ChainError::IterationGap {
                position,
                found: m.iteration,
            });
        }
        let expected_parent = match position {
            0 => String::new(),
            p => chain[p - 1].digest(),
        };
        if m.parent_manifest_digest != expected_parent {
            return Err(ChainError::BrokenLink {
                iteration: m.iteration,
                expected: expected_parent,
                found: m.parent_manifest_digest.clone(),
            });
        }
        if m.base_model_ref != first.base_model_ref {
            return Err(ChainError::BaseModelChanged {
                iteration: m.iteration,
                expected: first.base_model_ref.clone(),
                found: m.base_model_ref.clone(),
            });
        }
    }
    Ok(())
}

/// Walks parent links from the last manifest back to iteration 0 and
/// returns the number of steps taken.
pub fn walk_to_root(chain: &[IterationManifest]) -> Option<usize> {
    let by_digest: std::collections::HashMap<String, &IterationManifest> =
        chain.iter().map(|m| (m.digest(), m)).collect();
    let mut current = chain.last()?;
    let mut steps = 0;
    while !current.parent_manifest_digest.is_empty() {
        current = by_digest.get(&current.parent_manifest_digest)?;
        steps += 1;
        if steps > chain.len() {
            return None;
        }
    }
    (current.iteration == 0).then_some(steps)
}

//! Iterative reasoning expansion: N enriched rationale candidates per
//! sample from the current model.

use std::path::Path;

use serde::Serialize;

use crate::backend::{BackendHandle, GenerationParams, GenerationRequest, DEFAULT_CONCURRENCY_LIMIT};
use crate::catalyst::build_meta_prompt;
use crate::digest::derive_seed;
use crate::grammar::parse_rationale;
use crate::jsonl::{self, FileError, Record, SchemaError};
use crate::pool::map_bounded;
use crate::store::IterationDataset;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionConfig {
    /// Candidates per sample.
    pub n_samples: u32,
    pub params: GenerationParams,
    pub concurrency_limit: usize,
    /// Run seed; per-(sample, attempt) seeds derive from it.
    pub seed: u64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            n_samples: 5,
            params: GenerationParams::default(),
            concurrency_limit: DEFAULT_CONCURRENCY_LIMIT,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseStatus {
    Valid,
    Invalid(String),
}

/// One sampled rationale for one sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionCandidate {
    pub sample_id: String,
    /// 1-based attempt index.
    pub attempt: u32,
    pub raw_text: String,
    pub parse_status: ParseStatus,
    /// The `<thoughts>` block when valid, else empty.
    pub rationale: String,
    pub post_thoughts: String,
    pub truncated: bool,
}

impl ExpansionCandidate {
    /// Classifies a completion. Truncated output is invalid regardless of
    /// its content.
    pub fn from_completion(sample_id: &str, attempt: u32, raw_text: String, truncated: bool) -> Self {
        let mut c = Self {
            sample_id: sample_id.to_string(),
            attempt,
            raw_text,
            parse_status: ParseStatus::Valid,
            rationale: String::new(),
            post_thoughts: String::new(),
            truncated,
        };
        if truncated {
            c.parse_status = ParseStatus::Invalid("truncated: max_tokens reached".into());
            return c;
        }
        match parse_rationale(&c.raw_text) {
            Ok(tree) => {
                c.rationale = tree.thoughts_block();
                c.post_thoughts = tree.post_thoughts().to_string();
            }
            Err(e) => c.parse_status = ParseStatus::Invalid(format!("{}: {e}", e.class())),
        }
        c
    }

    pub fn transport_failed(sample_id: &str, attempt: u32, error: &str) -> Self {
        Self {
            sample_id: sample_id.to_string(),
            attempt,
            raw_text: String::new(),
            parse_status: ParseStatus::Invalid(format!("transport-failed: {error}")),
            rationale: String::new(),
            post_thoughts: String::new(),
            truncated: false,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.parse_status == ParseStatus::Valid
    }

    pub fn reason(&self) -> Option<&str> {
        match &self.parse_status {
            ParseStatus::Valid => None,
            ParseStatus::Invalid(r) => Some(r),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExpansionError {
    #[error("n_samples must be >= 1")]
    ZeroSamples,
    #[error("invalid generation parameters: {0}")]
    Params(String),
}

/// Samples `n_samples` candidates for every sample of `dataset` with the
/// meta-reasoning prompt over (instruction, incumbent rationale).
///
/// Always returns `|dataset| * n_samples` candidates ordered by (sample
/// index, attempt); backend failures become invalid candidates.
pub fn expand_dataset(
    dataset: &IterationDataset,
    handle: &BackendHandle,
    config: &ExpansionConfig,
) -> Result<Vec<ExpansionCandidate>, ExpansionError> {
    if config.n_samples == 0 {
        return Err(ExpansionError::ZeroSamples);
    }
    config.params.validate().map_err(ExpansionError::Params)?;
    let jobs: Vec<(usize, u32)> = (0..dataset.len())
        .flat_map(|i| (1..=config.n_samples).map(move |a| (i, a)))
        .collect();
    let iteration = dataset.iteration() as u64;
    Ok(map_bounded(&jobs, config.concurrency_limit, |_, &(index, attempt)| {
        let sample = &dataset.samples()[index];
        let prompt = build_meta_prompt(&sample.instruction, &sample.rationale);
        let req = GenerationRequest::new(prompt.system, prompt.user, config.params)
            .with_seed(derive_seed(config.seed, &[iteration, index as u64, attempt as u64]));
        match handle.generate(&req) {
            Ok(mut out) => {
                let c = out.remove(0);
                ExpansionCandidate::from_completion(&sample.id, attempt, c.text, c.truncated)
            }
            Err(e) => {
                log::warn!("expansion of {} attempt {attempt} failed: {e}", sample.id);
                ExpansionCandidate::transport_failed(&sample.id, attempt, &e.to_string())
            }
        }
    }))
}

#[derive(Serialize)]
struct CandidateLine<'a> {
    sample_id: &'a str,
    attempt: u32,
    raw_text: &'a str,
    parse_status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
    truncated: bool,
}

pub fn candidates_to_jsonl(candidates: &[ExpansionCandidate]) -> Vec<u8> {
    let lines: Vec<CandidateLine<'_>> = candidates
        .iter()
        .map(|c| CandidateLine {
            sample_id: &c.sample_id,
            attempt: c.attempt,
            raw_text: &c.raw_text,
            parse_status: if c.is_valid() { "valid" } else { "invalid" },
            reason: c.reason(),
            truncated: c.truncated,
        })
        .collect();
    jsonl::to_jsonl(&lines)
}

fn candidate_from_record(rec: &Record) -> Result<ExpansionCandidate, SchemaError> {
    rec.deny_unknown(&["sample_id", "attempt", "raw_text", "parse_status", "reason", "truncated"])?;
    let sample_id = rec.nonempty_str("sample_id")?;
    let attempt = u32::try_from(rec.u64("attempt")?)
        .ok()
        .filter(|a| *a >= 1)
        .ok_or_else(|| rec.field_error("attempt", "must be a positive integer"))?;
    let raw_text = rec.str("raw_text")?;
    let truncated = rec.opt_bool("truncated")?.unwrap_or(false);
    let status = rec.str("parse_status")?;
    match status.as_str() {
        "valid" => {
            let c = ExpansionCandidate::from_completion(&sample_id, attempt, raw_text, truncated);
            if let Some(reason) = c.reason() {
                return Err(rec.field_error("parse_status", format!("marked valid but {reason}")));
            }
            Ok(c)
        }
        "invalid" => {
            let reason = rec.opt_str("reason")?.unwrap_or_else(|| "invalid".into());
            Ok(ExpansionCandidate {
                sample_id,
                attempt,
                raw_text,
                parse_status: ParseStatus::Invalid(reason),
                rationale: String::new(),
                post_thoughts: String::new(),
                truncated,
            })
        }
        other => Err(rec.field_error("parse_status", format!("expected valid|invalid, got `{other}`"))),
    }
}

pub fn load_candidates(path: &Path) -> Result<Vec<ExpansionCandidate>, FileError> {
    jsonl::read_records(path)?
        .iter()
        .map(candidate_from_record)
        .collect::<Result<_, _>>()
        .map_err(|source| FileError::Schema {
            path: path.to_path_buf(),
            source,
        })
}

pub fn write_candidates(candidates: &[ExpansionCandidate], path: &Path) -> std::io::Result<()> {
    jsonl::write_once(path, &candidates_to_jsonl(candidates))
}

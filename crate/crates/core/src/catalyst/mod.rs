//! Reasoning catalyst: meta-reasoning prompts and acquisition of the fixed
//! set of enriched demonstrations from a source corpus.

mod prompt;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, BackendHandle, GenerationParams, GenerationRequest};
use crate::digest::derive_seed;
use crate::grammar::{is_pure_thoughts_block, parse_rationale};
use crate::pool::map_bounded;
use crate::store::{CatalystExample, CatalystSet, IterationDataset, StoreError};

pub use prompt::{
    build_meta_prompt, MetaPrompt, META_PROMPT_VERSION, META_REASONING_SYSTEM_PROMPT, META_REASONING_USER_TEMPLATE,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CatalystConfig {
    pub sample_count: usize,
    pub selection_seed: u64,
    pub max_regeneration_attempts: u32,
    pub params: GenerationParams,
}

impl Default for CatalystConfig {
    fn default() -> Self {
        Self {
            sample_count: 1000,
            selection_seed: 0,
            max_regeneration_attempts: 2,
            params: GenerationParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcquisitionReport {
    /// Extra generation requests issued after an invalid document.
    pub regenerations: u32,
    /// Source samples abandoned after exhausting their attempts.
    pub replacements: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalystError {
    #[error("sample_count must be positive")]
    ZeroCount,
    #[error("sample_count {requested} exceeds source dataset size {available}")]
    CountExceedsSource { requested: usize, available: usize },
    #[error("source pool exhausted: {obtained} of {needed} valid catalyst examples")]
    ExhaustedPool { needed: usize, obtained: usize },
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("store: {0}")]
    Store(#[from] StoreError),
}

enum Attempted {
    Valid { example: CatalystExample, regenerations: u32 },
    Exhausted { regenerations: u32 },
}

fn try_source(
    source: &IterationDataset,
    index: usize,
    config: &CatalystConfig,
    handle: &BackendHandle,
) -> Result<Attempted, BackendError> {
    let sample = &source.samples()[index];
    let prompt = build_meta_prompt(&sample.instruction, &sample.rationale);
    for attempt in 0..=config.max_regeneration_attempts {
        let req = GenerationRequest::new(&prompt.system, &prompt.user, config.params)
            .with_seed(derive_seed(config.selection_seed, &[index as u64, attempt as u64]));
        let completion = handle.generate(&req)?.remove(0);
        let text = completion.text.trim();
        if !completion.truncated && is_pure_thoughts_block(text) {
            return Ok(Attempted::Valid {
                example: CatalystExample {
                    id: sample.id.clone(),
                    instruction: sample.instruction.clone(),
                    rationale_before: sample.rationale.clone(),
                    rationale_enriched: text.to_string(),
                },
                regenerations: attempt,
            });
        }
        log::debug!("catalyst sample {} attempt {attempt}: invalid enriched rationale", sample.id);
    }
    Ok(Attempted::Exhausted {
        regenerations: config.max_regeneration_attempts,
    })
}

/// Samples `sample_count` source instances uniformly without replacement,
/// asks the backend for enriched rationales, and keeps only documents that
/// validate. Invalid output is regenerated; a sample that never validates
/// is replaced by the next one in the seeded permutation.
pub fn acquire_catalyst(
    source: &IterationDataset,
    config: &CatalystConfig,
    handle: &BackendHandle,
) -> Result<(CatalystSet, AcquisitionReport), CatalystError> {
    if config.sample_count == 0 {
        return Err(CatalystError::ZeroCount);
    }
    if config.sample_count > source.len() {
        return Err(CatalystError::CountExceedsSource {
            requested: config.sample_count,
            available: source.len(),
        });
    }
    let mut order: Vec<usize> = (0..source.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.selection_seed));

    let mut report = AcquisitionReport::default();
    let mut accepted: Vec<(usize, CatalystExample)> = Vec::with_capacity(config.sample_count);
    let mut pending: Vec<usize> = order[..config.sample_count].to_vec();
    let mut cursor = config.sample_count;

    while !pending.is_empty() {
        let outcomes = map_bounded(&pending, handle.concurrency_limit(), |_, &idx| {
            try_source(source, idx, config, handle)
        });
        let mut retry = Vec::new();
        for (&idx, outcome) in pending.iter().zip(outcomes) {
            match outcome? {
                Attempted::Valid { example, regenerations } => {
                    report.regenerations += regenerations;
                    accepted.push((idx, example));
                }
                Attempted::Exhausted { regenerations } => {
                    report.regenerations += regenerations;
                    report.replacements += 1;
                    match order.get(cursor) {
                        Some(&next) => {
                            retry.push(next);
                            cursor += 1;
                        }
                        None => {
                            return Err(CatalystError::ExhaustedPool {
                                needed: config.sample_count,
                                obtained: accepted.len(),
                            })
                        }
                    }
                }
            }
        }
        pending = retry;
    }
    accepted.sort_by_key(|(idx, _)| *idx);
    let set = CatalystSet::new(accepted.into_iter().map(|(_, ex)| ex).collect())?;
    Ok((set, report))
}

/// Optional refresh of catalyst demonstrations from later iterations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalystUpdate {
    #[default]
    Off,
    EnrichedOnly,
    Both,
}

impl CatalystUpdate {
    pub fn as_str(self) -> &'static str {
        match self {
            CatalystUpdate::Off => "off",
            CatalystUpdate::EnrichedOnly => "enriched-only",
            CatalystUpdate::Both => "both",
        }
    }
}

impl fmt::Display for CatalystUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CatalystUpdate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(CatalystUpdate::Off),
            "enriched-only" => Ok(CatalystUpdate::EnrichedOnly),
            "both" => Ok(CatalystUpdate::Both),
            other => Err(format!("unknown catalyst update rule `{other}` (off|enriched-only|both)")),
        }
    }
}

/// Replaces an example's enriched rationale with the thoughts block of the
/// same sample in `next` when that block is longer (in characters). With
/// [`CatalystUpdate::Both`] the original rationale is also replaced by the
/// sample's rationale in `previous`.
pub fn update_catalyst(
    catalyst: &CatalystSet,
    previous: &IterationDataset,
    next: &IterationDataset,
    rule: CatalystUpdate,
) -> Result<CatalystSet, StoreError> {
    if rule == CatalystUpdate::Off {
        return Ok(catalyst.clone());
    }
    let examples = catalyst
        .examples()
        .iter()
        .map(|ex| {
            let mut ex = ex.clone();
            let Some(sample) = next.get(&ex.id) else {
                return ex;
            };
            let Ok(tree) = parse_rationale(&sample.rationale) else {
                return ex;
            };
            let block = tree.thoughts_block();
            if block.chars().count() > ex.rationale_enriched.chars().count() {
                ex.rationale_enriched = block;
                if rule == CatalystUpdate::Both {
                    if let Some(prev) = previous.get(&ex.id) {
                        ex.rationale_before = prev.rationale.clone();
                    }
                }
            }
            ex
        })
        .collect();
    CatalystSet::new(examples)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::backend::{MockBackend, RetryPolicy};
    use crate::store::InstructionSample;

    const VALID: &str = "<thoughts><decomposition>split</decomposition><detail>work</detail></thoughts>";

    fn source(n: usize) -> IterationDataset {
        IterationDataset::new(
            0,
            (0..n)
                .map(|i| InstructionSample::seed(format!("s{i}"), format!("question {i}"), format!("because {i}"), format!("{i}")))
                .collect(),
        )
        .unwrap()
    }

    fn request(src: &IterationDataset, idx: usize, attempt: u32, cfg: &CatalystConfig) -> GenerationRequest {
        let s = &src.samples()[idx];
        let p = build_meta_prompt(&s.instruction, &s.rationale);
        GenerationRequest::new(p.system, p.user, cfg.params)
            .with_seed(derive_seed(cfg.selection_seed, &[idx as u64, attempt as u64]))
    }

    fn handle(mock: MockBackend) -> BackendHandle {
        BackendHandle::new(Arc::new(mock), "teacher").with_retry(RetryPolicy::immediate(0))
    }

    #[test]
    fn fixed_valid_document() {
        let src = source(5);
        let cfg = CatalystConfig {
            sample_count: 3,
            selection_seed: 11,
            ..Default::default()
        };
        let mut mock = MockBackend::new();
        for i in 0..5 {
            mock.script_generation("teacher", &request(&src, i, 0, &cfg), &[VALID]);
        }
        let h = handle(mock);
        let (set, report) = acquire_catalyst(&src, &cfg, &h).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(report, AcquisitionReport::default());
        assert!(set.examples().iter().all(|e| e.rationale_enriched == VALID));
        let (again, _) = acquire_catalyst(&src, &cfg, &h).unwrap();
        assert_eq!(again.digest(), set.digest());
        // Ordered by source index.
        let idx: Vec<usize> = set.examples().iter().map(|e| e.id[1..].parse().unwrap()).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn invalid_then_valid_counts_regenerations() {
        let src = source(3);
        let cfg = CatalystConfig {
            sample_count: 3,
            selection_seed: 5,
            max_regeneration_attempts: 2,
            ..Default::default()
        };
        let mut mock = MockBackend::new();
        for i in 0..3 {
            mock.script_generation("teacher", &request(&src, i, 0, &cfg), &["<thoughts><reflection>x</reflection></thoughts>"]);
            mock.script_generation("teacher", &request(&src, i, 1, &cfg), &[VALID]);
        }
        let (set, report) = acquire_catalyst(&src, &cfg, &handle(mock)).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(report.regenerations, 3);
        assert_eq!(report.replacements, 0);
    }

    #[test]
    fn failing_sample_is_replaced_and_pool_can_exhaust() {
        let src = source(3);
        let cfg = CatalystConfig {
            sample_count: 2,
            selection_seed: 1,
            max_regeneration_attempts: 0,
            ..Default::default()
        };
        let mut order: Vec<usize> = (0..3).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let mut mock = MockBackend::new();
        mock.script_generation("teacher", &request(&src, order[0], 0, &cfg), &["not thoughts"]);
        mock.script_generation("teacher", &request(&src, order[1], 0, &cfg), &[VALID]);
        mock.script_generation("teacher", &request(&src, order[2], 0, &cfg), &[VALID]);
        let (set, report) = acquire_catalyst(&src, &cfg, &handle(mock)).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(report.replacements, 1);
        assert!(set.examples().iter().all(|e| e.id != format!("s{}", order[0])));

        let mut bad = MockBackend::new();
        for i in 0..3 {
            bad.script_generation("teacher", &request(&src, i, 0, &cfg), &["<thoughts>unterminated"]);
        }
        assert!(matches!(
            acquire_catalyst(&src, &cfg, &handle(bad)),
            Err(CatalystError::ExhaustedPool { needed: 2, obtained: 0 })
        ));
    }

    #[test]
    fn count_limits_and_backend_errors() {
        let src = source(2);
        let h = handle(MockBackend::new());
        let cfg = |n| CatalystConfig {
            sample_count: n,
            ..Default::default()
        };
        assert!(matches!(acquire_catalyst(&src, &cfg(3), &h), Err(CatalystError::CountExceedsSource { .. })));
        assert!(matches!(acquire_catalyst(&src, &cfg(0), &h), Err(CatalystError::ZeroCount)));
        assert!(matches!(acquire_catalyst(&src, &cfg(1), &h), Err(CatalystError::Backend(_))));
    }

    #[test]
    fn update_rules() {
        let prev = source(2);
        let next_samples: Vec<_> = prev
            .samples()
            .iter()
            .map(|s| InstructionSample {
                rationale: format!("<thoughts><detail>a much longer enriched rationale for {}</detail></thoughts>\nanswer", s.id),
                iteration: 1,
                ..s.clone()
            })
            .collect();
        let next = IterationDataset::new(1, next_samples).unwrap();
        let cat = CatalystSet::new(vec![CatalystExample {
            id: "s0".into(),
            instruction: "question 0".into(),
            rationale_before: "orig".into(),
            rationale_enriched: "<thoughts>x</thoughts>".into(),
        }])
        .unwrap();
        assert_eq!(update_catalyst(&cat, &prev, &next, CatalystUpdate::Off).unwrap(), cat);
        let e = update_catalyst(&cat, &prev, &next, CatalystUpdate::EnrichedOnly).unwrap();
        assert_eq!(
            e.examples()[0].rationale_enriched,
            "<thoughts><detail>a much longer enriched rationale for s0</detail></thoughts>"
        );
        assert_eq!(e.examples()[0].rationale_before, "orig");
        let b = update_catalyst(&cat, &prev, &next, CatalystUpdate::Both).unwrap();
        assert_eq!(b.examples()[0].rationale_before, "because 0");
    }
}

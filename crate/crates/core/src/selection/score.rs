use std::collections::BTreeMap;

use super::decision::{decide, SelectionDecision, Winner};
use super::length::check_ids;
use super::{SelectionError, SelectorKind};
use crate::backend::BackendHandle;
use crate::expansion::ExpansionCandidate;
use crate::store::InstructionSample;

/// Identifies the scoring-context rendering in config digests.
pub const SCORING_CONTEXT_VERSION: &str = "plain-v1";

/// Context whose continuation is the answer: instruction, blank line,
/// rationale verbatim as stored, blank line.
pub fn render_scoring_context(instruction: &str, rationale: &str) -> String {
    format!("{instruction}\n\n{rationale}\n\n")
}

/// Scores every branch as the total log-probability of the answer after
/// (instruction, branch rationale) and keeps the argmax. The incumbent wins
/// ties. Candidate rationales are their full raw text.
pub fn select_by_score(
    sample: &InstructionSample,
    candidates: &[ExpansionCandidate],
    scorer: &BackendHandle,
    kind: SelectorKind,
) -> Result<SelectionDecision, SelectionError> {
    check_ids(sample, candidates)?;
    let score = |rationale: &str| {
        scorer
            .score_continuation(&render_scoring_context(&sample.instruction, rationale), &sample.answer)
            .map(|r| r.total_logprob)
            .map_err(|source| SelectionError::Scoring {
                sample_id: sample.id.clone(),
                source,
            })
    };
    let incumbent = score(&sample.rationale)?;
    let mut scored = Vec::new();
    for c in candidates.iter().filter(|c| c.is_valid()) {
        scored.push((c.attempt, score(&c.raw_text)?));
    }
    let (winner, tie_break_applied) = decide(incumbent, &scored);
    let mut scores = BTreeMap::new();
    scores.insert(Winner::Incumbent.label(), incumbent);
    for (a, s) in &scored {
        scores.insert(Winner::Candidate(*a).label(), *s);
    }
    Ok(SelectionDecision {
        sample_id: sample.id.clone(),
        winner,
        selector: kind,
        scores,
        tie_break_applied,
    })
}

use std::collections::HashMap;

use super::decision::{SelectionDecision, Winner};
use super::SelectionError;
use crate::expansion::ExpansionCandidate;
use crate::store::{InstructionSample, IterationDataset, Provenance};

/// Builds the next iteration's dataset from one decision per sample.
///
/// Winning candidates replace the rationale with their full raw text;
/// everything else keeps the incumbent. Answers, instructions, ids and order
/// never change.
pub fn apply_selection(
    dataset: &IterationDataset,
    decisions: &[SelectionDecision],
    candidates: &[ExpansionCandidate],
) -> Result<IterationDataset, SelectionError> {
    let mut by_sample: HashMap<&str, &SelectionDecision> = HashMap::with_capacity(decisions.len());
    for d in decisions {
        if dataset.get(&d.sample_id).is_none() {
            return Err(SelectionError::UnknownSample(d.sample_id.clone()));
        }
        if by_sample.insert(d.sample_id.as_str(), d).is_some() {
            return Err(SelectionError::DuplicateDecision(d.sample_id.clone()));
        }
    }
    let valid: HashMap<(&str, u32), &ExpansionCandidate> = candidates
        .iter()
        .filter(|c| c.is_valid())
        .map(|c| ((c.sample_id.as_str(), c.attempt), c))
        .collect();

    let next_iteration = dataset.iteration() + 1;
    let mut samples = Vec::with_capacity(dataset.len());
    for s in dataset.samples() {
        let d = by_sample
            .get(s.id.as_str())
            .ok_or_else(|| SelectionError::MissingDecision(s.id.clone()))?;
        let (rationale, provenance) = match d.winner {
            Winner::Incumbent => (s.rationale.clone(), Provenance::IncumbentRetained),
            Winner::Candidate(attempt) => {
                let c = valid
                    .get(&(s.id.as_str(), attempt))
                    .ok_or_else(|| SelectionError::InvalidWinner {
                        sample_id: s.id.clone(),
                        attempt,
                    })?;
                (c.raw_text.clone(), Provenance::ExpansionSelected)
            }
        };
        samples.push(InstructionSample {
            id: s.id.clone(),
            instruction: s.instruction.clone(),
            rationale,
            answer: s.answer.clone(),
            iteration: next_iteration,
            provenance,
        });
    }
    Ok(IterationDataset::new(next_iteration, samples)?)
}

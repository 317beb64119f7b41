use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::decision::{decide, SelectionDecision, Winner};
use super::{SelectionError, SelectorKind};
use crate::expansion::ExpansionCandidate;
use crate::store::InstructionSample;

/// How "longer" is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthMetric {
    /// Unicode scalar values of the full stored text.
    #[default]
    Chars,
    /// Whitespace-delimited tokens.
    Tokens,
}

impl LengthMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            LengthMetric::Chars => "chars",
            LengthMetric::Tokens => "tokens",
        }
    }
}

impl fmt::Display for LengthMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LengthMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chars" => Ok(LengthMetric::Chars),
            "tokens" => Ok(LengthMetric::Tokens),
            other => Err(format!("unknown length metric `{other}` (chars|tokens)")),
        }
    }
}

pub fn rationale_length(text: &str, metric: LengthMetric) -> usize {
    match metric {
        LengthMetric::Chars => text.chars().count(),
        LengthMetric::Tokens => text.split_whitespace().count(),
    }
}

pub(super) fn check_ids(sample: &InstructionSample, candidates: &[ExpansionCandidate]) -> Result<(), SelectionError> {
    match candidates.iter().find(|c| c.sample_id != sample.id) {
        Some(c) => Err(SelectionError::MismatchedSample {
            expected: sample.id.clone(),
            found: c.sample_id.clone(),
        }),
        None => Ok(()),
    }
}

/// Keeps the longest of the incumbent and the valid candidates. A
/// candidate's length is that of its full raw text, which is what would be
/// stored if it won.
pub fn select_length(
    sample: &InstructionSample,
    candidates: &[ExpansionCandidate],
    metric: LengthMetric,
) -> Result<SelectionDecision, SelectionError> {
    check_ids(sample, candidates)?;
    let incumbent = rationale_length(&sample.rationale, metric) as f64;
    let scored: Vec<(u32, f64)> = candidates
        .iter()
        .filter(|c| c.is_valid())
        .map(|c| (c.attempt, rationale_length(&c.raw_text, metric) as f64))
        .collect();
    let (winner, tie_break_applied) = decide(incumbent, &scored);
    let mut scores = BTreeMap::new();
    scores.insert(Winner::Incumbent.label(), incumbent);
    for (a, s) in &scored {
        scores.insert(Winner::Candidate(*a).label(), *s);
    }
    Ok(SelectionDecision {
        sample_id: sample.id.clone(),
        winner,
        selector: SelectorKind::Length,
        scores,
        tie_break_applied,
    })
}

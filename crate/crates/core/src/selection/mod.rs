//! Reasoning selectors: decide per sample whether an expansion candidate
//! replaces the incumbent rationale, then build the next dataset.

mod apply;
mod decision;
mod length;
mod score;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, BackendHandle};
use crate::expansion::ExpansionCandidate;
use crate::pool::map_bounded;
use crate::store::IterationDataset;

pub use apply::apply_selection;
pub use decision::{decide, decisions_to_jsonl, load_decisions, write_decisions, SelectionDecision, Winner};
pub use length::{rationale_length, select_length, LengthMetric};
pub use score::{render_scoring_context, select_by_score, SCORING_CONTEXT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    Length,
    OffPolicy,
    OnPolicy,
}

impl SelectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectorKind::Length => "length",
            SelectorKind::OffPolicy => "off-policy",
            SelectorKind::OnPolicy => "on-policy",
        }
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length" => Ok(SelectorKind::Length),
            "off-policy" => Ok(SelectorKind::OffPolicy),
            "on-policy" => Ok(SelectorKind::OnPolicy),
            other => Err(format!("unknown selector `{other}` (length|off-policy|on-policy)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SelectionError {
    #[error("candidate for `{found}` passed to selection of `{expected}`")]
    MismatchedSample { expected: String, found: String },
    #[error("candidates reference unknown sample `{0}`")]
    UnknownSample(String),
    #[error("scoring failed for `{sample_id}`: {source}")]
    Scoring {
        sample_id: String,
        #[source]
        source: BackendError,
    },
    #[error("no decision for sample `{0}`")]
    MissingDecision(String),
    #[error("duplicate decision for sample `{0}`")]
    DuplicateDecision(String),
    #[error("decision for `{sample_id}` picks attempt {attempt}, which is not a valid candidate")]
    InvalidWinner { sample_id: String, attempt: u32 },
    #[error("{0}")]
    Store(#[from] crate::store::StoreError),
}

/// How each sample is judged.
#[derive(Debug, Clone)]
pub enum Strategy {
    Length(LengthMetric),
    /// Log-probability of the answer under `scorer`. `kind` is recorded in
    /// decisions; off- and on-policy differ only in the scorer's model.
    Score { kind: SelectorKind, scorer: BackendHandle },
}

impl Strategy {
    pub fn kind(&self) -> SelectorKind {
        match self {
            Strategy::Length(_) => SelectorKind::Length,
            Strategy::Score { kind, .. } => *kind,
        }
    }
}

/// Runs `strategy` over every sample, one decision per sample in dataset
/// order. Any scoring failure aborts the whole run.
pub fn select_all(
    dataset: &IterationDataset,
    candidates: &[ExpansionCandidate],
    strategy: &Strategy,
) -> Result<Vec<SelectionDecision>, SelectionError> {
    let mut grouped: HashMap<&str, Vec<ExpansionCandidate>> =
        dataset.samples().iter().map(|s| (s.id.as_str(), Vec::new())).collect();
    for c in candidates {
        grouped
            .get_mut(c.sample_id.as_str())
            .ok_or_else(|| SelectionError::UnknownSample(c.sample_id.clone()))?
            .push(c.clone());
    }
    let workers = match strategy {
        Strategy::Length(_) => 1,
        Strategy::Score { scorer, .. } => scorer.concurrency_limit(),
    };
    map_bounded(dataset.samples(), workers, |_, sample| {
        let group = &grouped[sample.id.as_str()];
        match strategy {
            Strategy::Length(metric) => select_length(sample, group, *metric),
            Strategy::Score { kind, scorer } => select_by_score(sample, group, scorer, *kind),
        }
    })
    .into_iter()
    .collect()
}

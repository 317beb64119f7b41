use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SelectorKind;
use crate::jsonl::{self, FileError, SchemaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    Incumbent,
    Candidate(u32),
}

impl Winner {
    pub fn label(self) -> String {
        match self {
            Winner::Incumbent => "incumbent".into(),
            Winner::Candidate(a) => format!("candidate:{a}"),
        }
    }
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Winner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "incumbent" {
            return Ok(Winner::Incumbent);
        }
        s.strip_prefix("candidate:")
            .and_then(|a| a.parse().ok())
            .map(Winner::Candidate)
            .ok_or_else(|| format!("bad winner label `{s}`"))
    }
}

impl Serialize for Winner {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Winner {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Outcome of one incumbent-vs-candidates comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionDecision {
    pub sample_id: String,
    pub winner: Winner,
    pub selector: SelectorKind,
    /// Branch label (`incumbent`, `candidate:<attempt>`) to score.
    pub scores: BTreeMap<String, f64>,
    pub tie_break_applied: bool,
}

/// Joint argmax over the incumbent and valid candidates.
///
/// Ties with the incumbent keep the incumbent; ties among candidates keep
/// the lowest attempt. `tie_break_applied` reports whether the maximum was
/// shared.
pub fn decide(incumbent: f64, candidates: &[(u32, f64)]) -> (Winner, bool) {
    let best = candidates
        .iter()
        .map(|(_, s)| *s)
        .fold(incumbent, f64::max);
    let shared = candidates.iter().filter(|(_, s)| *s == best).count() + usize::from(incumbent == best);
    let winner = if incumbent == best {
        Winner::Incumbent
    } else {
        let attempt = candidates
            .iter()
            .filter(|(_, s)| *s == best)
            .map(|(a, _)| *a)
            .min()
            .expect("some candidate holds the maximum");
        Winner::Candidate(attempt)
    };
    (winner, shared > 1)
}

pub fn decisions_to_jsonl(decisions: &[SelectionDecision]) -> Vec<u8> {
    jsonl::to_jsonl(decisions)
}

pub fn write_decisions(decisions: &[SelectionDecision], path: &Path) -> std::io::Result<()> {
    jsonl::write_once(path, &decisions_to_jsonl(decisions))
}

pub fn load_decisions(path: &Path) -> Result<Vec<SelectionDecision>, FileError> {
    let text = std::fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| FileError::Schema {
                path: path.to_path_buf(),
                source: SchemaError::new(i + 1, None, e.to_string()),
            })
        })
        .collect()
}

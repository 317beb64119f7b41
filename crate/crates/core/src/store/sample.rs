use std::fmt;

use serde::{Deserialize, Serialize};

/// Where a sample's current rationale came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Seed,
    ExpansionSelected,
    IncumbentRetained,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Seed => "seed",
            Provenance::ExpansionSelected => "expansion-selected",
            Provenance::IncumbentRetained => "incumbent-retained",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "seed" => Some(Provenance::Seed),
            "expansion-selected" => Some(Provenance::ExpansionSelected),
            "incumbent-retained" => Some(Provenance::IncumbentRetained),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (instruction, rationale, answer) triple of an iteration dataset.
///
/// Field order here is the canonical on-disk key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionSample {
    pub id: String,
    pub instruction: String,
    pub rationale: String,
    pub answer: String,
    pub iteration: u32,
    pub provenance: Provenance,
}

impl InstructionSample {
    pub fn seed(
        id: impl Into<String>,
        instruction: impl Into<String>,
        rationale: impl Into<String>,
        answer: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            instruction: instruction.into(),
            rationale: rationale.into(),
            answer: answer.into(),
            iteration: 0,
            provenance: Provenance::Seed,
        }
    }
}

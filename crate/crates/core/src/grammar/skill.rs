use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the nine meta-reasoning skills that may tag a span of thoughts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillTag {
    Decomposition,
    Backward,
    Detail,
    Summary,
    Alternatives,
    Reflection,
    Analogy,
    Check,
    Other,
}

impl SkillTag {
    pub const ALL: [SkillTag; 9] = [
        SkillTag::Decomposition,
        SkillTag::Backward,
        SkillTag::Detail,
        SkillTag::Summary,
        SkillTag::Alternatives,
        SkillTag::Reflection,
        SkillTag::Analogy,
        SkillTag::Check,
        SkillTag::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SkillTag::Decomposition => "decomposition",
            SkillTag::Backward => "backward",
            SkillTag::Detail => "detail",
            SkillTag::Summary => "summary",
            SkillTag::Alternatives => "alternatives",
            SkillTag::Reflection => "reflection",
            SkillTag::Analogy => "analogy",
            SkillTag::Check => "check",
            SkillTag::Other => "other",
        }
    }

    /// Position of this skill in [`SkillTag::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<SkillTag> {
        SkillTag::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn open_tag(self) -> String {
        format!("<{}>", self.name())
    }

    pub fn close_tag(self) -> String {
        format!("</{}>", self.name())
    }
}

impl fmt::Display for SkillTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown meta-reasoning skill `{0}`")]
pub struct UnknownSkill(pub String);

impl FromStr for SkillTag {
    type Err = UnknownSkill;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SkillTag::from_name(s).ok_or_else(|| UnknownSkill(s.to_string()))
    }
}

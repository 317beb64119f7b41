//! The `<thoughts>` meta-reasoning markup: skill taxonomy, parser,
//! byte-exact renderer and skill counting.

mod histogram;
mod parser;
mod skill;
mod tree;

pub use histogram::{skill_histogram, SkillHistogram};
pub use parser::{is_pure_thoughts_block, parse_rationale, GrammarError, MAX_DECOMPOSITION_DEPTH};
pub use skill::{SkillTag, UnknownSkill};
pub use tree::{render_rationale, RationaleTree, Segment, SkillNode};

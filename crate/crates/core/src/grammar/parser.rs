//! Recursive-descent-style parser for `<thoughts>` documents.
//!
//! Tags are exact lowercase words in angle brackets with no attributes or
//! whitespace. Anything bracket-shaped that is not such a word (`a < b`,
//! `<x y>`, `<B>`) is literal text. A well-formed lowercase tag whose name is
//! not `thoughts` or one of the nine skills is an error.

use super::skill::SkillTag;
use super::tree::{RationaleTree, Segment, SkillNode, THOUGHTS_CLOSE, THOUGHTS_OPEN};

/// Maximum self-nesting depth of `<decomposition>`.
pub const MAX_DECOMPOSITION_DEPTH: usize = 3;

/// Longest tag name the tokenizer will consider (`decomposition` is 13).
const MAX_TAG_NAME: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("unbalanced tag `{tag}` at byte {position}")]
    UnbalancedTag { tag: String, position: usize },
    #[error("unknown tag `{tag}` at byte {position}")]
    UnknownTag { tag: String, position: usize },
    #[error("document does not start with <thoughts>")]
    MissingEnvelope,
    #[error("<reflection> at byte {position} precedes any reasoning")]
    ReflectionOrdering { position: usize },
    #[error("decomposition nested {depth} deep at byte {position} (max {MAX_DECOMPOSITION_DEPTH})")]
    DepthExceeded { depth: usize, position: usize },
}

impl GrammarError {
    /// Stable short name of the error class.
    pub fn class(&self) -> &'static str {
        match self {
            GrammarError::UnbalancedTag { .. } => "unbalanced-tag",
            GrammarError::UnknownTag { .. } => "unknown-tag",
            GrammarError::MissingEnvelope => "missing-envelope",
            GrammarError::ReflectionOrdering { .. } => "reflection-ordering",
            GrammarError::DepthExceeded { .. } => "depth-exceeded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TagName {
    Thoughts,
    Skill(SkillTag),
}

#[derive(Debug, Clone, Copy)]
struct Tag<'a> {
    name: &'a str,
    closing: bool,
    len: usize,
}

/// Recognizes `<name>` or `</name>` at the start of `s`.
fn scan_tag(s: &str) -> Option<Tag<'_>> {
    let bytes = s.as_bytes();
    if bytes.first() != Some(&b'<') {
        return None;
    }
    let closing = bytes.get(1) == Some(&b'/');
    let start = if closing { 2 } else { 1 };
    let mut end = start;
    while end < bytes.len() && end - start <= MAX_TAG_NAME && bytes[end].is_ascii_lowercase() {
        end += 1;
    }
    if end == start || end - start > MAX_TAG_NAME || bytes.get(end) != Some(&b'>') {
        return None;
    }
    Some(Tag {
        name: &s[start..end],
        closing,
        len: end + 1,
    })
}

fn classify(name: &str) -> Option<TagName> {
    if name == "thoughts" {
        Some(TagName::Thoughts)
    } else {
        SkillTag::from_name(name).map(TagName::Skill)
    }
}

struct Frame {
    skill: SkillTag,
    position: usize,
    children: Vec<Segment>,
}

struct Parser<'a> {
    src: &'a str,
    body: Vec<Segment>,
    stack: Vec<Frame>,
    text_start: usize,
    seen_reasoning: bool,
}

impl<'a> Parser<'a> {
    fn current(&mut self) -> &mut Vec<Segment> {
        match self.stack.last_mut() {
            Some(f) => &mut f.children,
            None => &mut self.body,
        }
    }

    fn inside_reflection(&self) -> bool {
        self.stack.iter().any(|f| f.skill == SkillTag::Reflection)
    }

    fn flush_text(&mut self, end: usize) {
        if end > self.text_start {
            let text = &self.src[self.text_start..end];
            if !self.seen_reasoning && !self.inside_reflection() && !text.trim().is_empty() {
                self.seen_reasoning = true;
            }
            self.current().push(Segment::Text(text.to_string()));
        }
    }

    fn open(&mut self, skill: SkillTag, position: usize) -> Result<(), GrammarError> {
        if skill == SkillTag::Reflection && !self.seen_reasoning {
            return Err(GrammarError::ReflectionOrdering { position });
        }
        if skill == SkillTag::Decomposition {
            let depth = 1 + self
                .stack
                .iter()
                .filter(|f| f.skill == SkillTag::Decomposition)
                .count();
            if depth > MAX_DECOMPOSITION_DEPTH {
                return Err(GrammarError::DepthExceeded { depth, position });
            }
        }
        self.stack.push(Frame {
            skill,
            position,
            children: Vec::new(),
        });
        Ok(())
    }

    fn close(&mut self, skill: SkillTag, tag: &str, position: usize) -> Result<(), GrammarError> {
        match self.stack.last() {
            Some(top) if top.skill == skill => {
                let frame = self.stack.pop().expect("checked non-empty");
                if frame.skill != SkillTag::Reflection {
                    self.seen_reasoning = true;
                }
                let node = SkillNode::new(frame.skill, frame.children);
                self.current().push(Segment::Node(node));
                Ok(())
            }
            _ => Err(GrammarError::UnbalancedTag {
                tag: tag.to_string(),
                position,
            }),
        }
    }

    fn run(mut self, leading: usize) -> Result<RationaleTree, GrammarError> {
        let mut i = leading + THOUGHTS_OPEN.len();
        self.text_start = i;
        while let Some(off) = self.src[i..].find('<') {
            let at = i + off;
            let Some(tag) = scan_tag(&self.src[at..]) else {
                i = at + 1;
                continue;
            };
            let raw_tag = &self.src[at..at + tag.len];
            let kind = classify(tag.name).ok_or_else(|| GrammarError::UnknownTag {
                tag: raw_tag.to_string(),
                position: at,
            })?;
            self.flush_text(at);
            match (kind, tag.closing) {
                (TagName::Thoughts, true) => {
                    if let Some(open) = self.stack.last() {
                        return Err(GrammarError::UnbalancedTag {
                            tag: open.skill.open_tag(),
                            position: open.position,
                        });
                    }
                    let post = &self.src[at + tag.len..];
                    return Ok(RationaleTree::from_parsed(
                        self.src[..leading].to_string(),
                        self.body,
                        post.to_string(),
                    ));
                }
                (TagName::Thoughts, false) => {
                    return Err(GrammarError::UnbalancedTag {
                        tag: raw_tag.to_string(),
                        position: at,
                    });
                }
                (TagName::Skill(skill), false) => self.open(skill, at)?,
                (TagName::Skill(skill), true) => self.close(skill, raw_tag, at)?,
            }
            i = at + tag.len;
            self.text_start = i;
        }
        // Reached the end without </thoughts>.
        Err(match self.stack.last() {
            Some(open) => GrammarError::UnbalancedTag {
                tag: open.skill.open_tag(),
                position: open.position,
            },
            None => GrammarError::UnbalancedTag {
                tag: THOUGHTS_OPEN.to_string(),
                position: leading,
            },
        })
    }
}

/// Parses a raw rationale into a validated tree.
///
/// Accepts any string; returns either a tree satisfying every grammar rule
/// or exactly one classified error.
pub fn parse_rationale(raw: &str) -> Result<RationaleTree, GrammarError> {
    let trimmed = raw.trim_start();
    if !trimmed.starts_with(THOUGHTS_OPEN) {
        return Err(GrammarError::MissingEnvelope);
    }
    let leading = raw.len() - trimmed.len();
    Parser {
        src: raw,
        body: Vec::new(),
        stack: Vec::new(),
        text_start: 0,
        seen_reasoning: false,
    }
    .run(leading)
}

/// True when `raw` is a bare thoughts block: valid, and nothing but
/// whitespace outside the envelope.
pub fn is_pure_thoughts_block(raw: &str) -> bool {
    parse_rationale(raw).is_ok_and(|t| t.post_thoughts().trim().is_empty())
        && raw.trim_end().ends_with(THOUGHTS_CLOSE)
}

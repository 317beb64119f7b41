use super::parser::{parse_rationale, GrammarError};
use super::skill::SkillTag;

pub(crate) const THOUGHTS_OPEN: &str = "<thoughts>";
pub(crate) const THOUGHTS_CLOSE: &str = "</thoughts>";

/// A piece of content at one level of a thoughts document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    /// Untagged text, preserved verbatim (including whitespace).
    Text(String),
    Node(SkillNode),
}

/// A skill-tagged span. Its children alternate freely between text and
/// nested nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillNode {
    pub skill: SkillTag,
    pub children: Vec<Segment>,
}

impl SkillNode {
    pub fn new(skill: SkillTag, children: Vec<Segment>) -> Self {
        Self { skill, children }
    }

    /// A node holding a single text span.
    pub fn text(skill: SkillTag, text: impl Into<String>) -> Self {
        Self {
            skill,
            children: vec![Segment::Text(text.into())],
        }
    }

    /// Text spans directly under this node, in order.
    pub fn text_spans(&self) -> impl Iterator<Item = &str> {
        self.children.iter().filter_map(|c| match c {
            Segment::Text(t) => Some(t.as_str()),
            Segment::Node(_) => None,
        })
    }

    /// Nested nodes directly under this node, in order.
    pub fn child_nodes(&self) -> impl Iterator<Item = &SkillNode> {
        self.children.iter().filter_map(|c| match c {
            Segment::Node(n) => Some(n),
            Segment::Text(_) => None,
        })
    }

    fn render_into(&self, out: &mut String) {
        out.push('<');
        out.push_str(self.skill.name());
        out.push('>');
        render_segments(&self.children, out);
        out.push_str("</");
        out.push_str(self.skill.name());
        out.push('>');
    }
}

/// A validated `<thoughts>` document.
///
/// Rendering reproduces the parsed source byte-for-byte: whitespace before
/// the envelope is kept in `leading`, and anything after the closing
/// `</thoughts>` is kept in `post_thoughts`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationaleTree {
    leading: String,
    body: Vec<Segment>,
    post_thoughts: String,
}

impl RationaleTree {
    pub(crate) fn from_parsed(leading: String, body: Vec<Segment>, post_thoughts: String) -> Self {
        Self {
            leading,
            body,
            post_thoughts,
        }
    }

    /// Assembles a tree from parts and validates it by re-parsing its
    /// rendering, so every tree in existence satisfies the grammar.
    pub fn build(
        leading: impl Into<String>,
        body: Vec<Segment>,
        post_thoughts: impl Into<String>,
    ) -> Result<Self, GrammarError> {
        let candidate = Self {
            leading: leading.into(),
            body,
            post_thoughts: post_thoughts.into(),
        };
        let parsed = parse_rationale(&candidate.render())?;
        // Adjacent text segments merge on re-parse; keep the parsed shape.
        Ok(parsed)
    }

    pub fn leading(&self) -> &str {
        &self.leading
    }

    pub fn body(&self) -> &[Segment] {
        &self.body
    }

    pub fn post_thoughts(&self) -> &str {
        &self.post_thoughts
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    /// Top-level skill nodes in document order.
    pub fn top_level_nodes(&self) -> impl Iterator<Item = &SkillNode> {
        self.body.iter().filter_map(|s| match s {
            Segment::Node(n) => Some(n),
            Segment::Text(_) => None,
        })
    }

    pub fn top_level_skills(&self) -> Vec<SkillTag> {
        self.top_level_nodes().map(|n| n.skill).collect()
    }

    /// Every node in the document, pre-order.
    pub fn nodes(&self) -> Vec<&SkillNode> {
        fn walk<'a>(segments: &'a [Segment], out: &mut Vec<&'a SkillNode>) {
            for seg in segments {
                if let Segment::Node(n) = seg {
                    out.push(n);
                    walk(&n.children, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }

    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }

    /// Inserts `segment` at `index` of the top level and revalidates.
    pub fn with_inserted(&self, index: usize, segment: Segment) -> Result<Self, GrammarError> {
        let mut body = self.body.clone();
        body.insert(index.min(body.len()), segment);
        Self::build(self.leading.clone(), body, self.post_thoughts.clone())
    }

    /// The envelope and everything inside it, without `leading` or
    /// `post_thoughts`.
    pub fn thoughts_block(&self) -> String {
        let mut out = String::new();
        out.push_str(THOUGHTS_OPEN);
        render_segments(&self.body, &mut out);
        out.push_str(THOUGHTS_CLOSE);
        out
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.leading.len() + self.post_thoughts.len() + 64);
        out.push_str(&self.leading);
        out.push_str(THOUGHTS_OPEN);
        render_segments(&self.body, &mut out);
        out.push_str(THOUGHTS_CLOSE);
        out.push_str(&self.post_thoughts);
        out
    }
}

/// Renders a tree back to its source text.
pub fn render_rationale(tree: &RationaleTree) -> String {
    tree.render()
}

pub(crate) fn render_segments(segments: &[Segment], out: &mut String) {
    for seg in segments {
        match seg {
            Segment::Text(t) => out.push_str(t),
            Segment::Node(n) => n.render_into(out),
        }
    }
}

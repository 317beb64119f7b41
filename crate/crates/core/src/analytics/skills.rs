use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::grammar::{parse_rationale, SkillHistogram, SkillTag};
use crate::jsonl::{self, FileError, SchemaError};

/// Which field of a record holds the rationale, by file kind.
const RATIONALE_FIELDS: [&str; 3] = ["raw_text", "rationale_enriched", "rationale"];

/// Skill usage over a set of rationales.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkillReport {
    pub documents: u64,
    pub unparsed: u64,
    pub histogram: SkillHistogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkillEntry {
    pub count: u64,
    pub fraction: f64,
}

#[derive(Serialize)]
struct ReportJson {
    documents: u64,
    parsed: u64,
    unparsed: u64,
    total_tags: u64,
    skills: serde_json::Map<String, serde_json::Value>,
}

impl SkillReport {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut report = SkillReport::default();
        for text in texts {
            report.add(text);
        }
        report
    }

    pub fn add(&mut self, text: &str) {
        self.documents += 1;
        match parse_rationale(text) {
            Ok(tree) => self.histogram.add_tree(&tree),
            Err(_) => self.unparsed += 1,
        }
    }

    pub fn parsed(&self) -> u64 {
        self.documents - self.unparsed
    }

    /// Count and share of all tags for one skill; shares are zero when no
    /// tag was seen.
    pub fn entry(&self, skill: SkillTag) -> SkillEntry {
        let count = self.histogram.get(skill);
        let total = self.histogram.total();
        SkillEntry {
            count,
            fraction: if total == 0 { 0.0 } else { count as f64 / total as f64 },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let skills = SkillTag::ALL
            .iter()
            .map(|&s| {
                (
                    s.name().to_string(),
                    serde_json::to_value(self.entry(s)).expect("entry serializes"),
                )
            })
            .collect();
        serde_json::to_value(ReportJson {
            documents: self.documents,
            parsed: self.parsed(),
            unparsed: self.unparsed,
            total_tags: self.histogram.total(),
            skills,
        })
        .expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<14} {:>8} {:>9}\n", "skill", "count", "fraction");
        for s in SkillTag::ALL {
            let e = self.entry(s);
            let _ = writeln!(out, "{:<14} {:>8} {:>9.4}", s.name(), e.count, e.fraction);
        }
        let _ = writeln!(out, "{:<14} {:>8}", "total", self.histogram.total());
        let _ = writeln!(out, "{:<14} {:>8}", "unparsed", self.unparsed);
        out
    }
}

/// Reads a dataset, candidates or catalyst JSONL file and tallies the skills
/// of each record's rationale. The rationale field is `raw_text`,
/// `rationale_enriched` or `rationale`, tried in that order.
pub fn skill_report(path: &Path) -> Result<SkillReport, FileError> {
    let records = jsonl::read_records(path)?;
    let mut report = SkillReport::default();
    for rec in &records {
        let field = RATIONALE_FIELDS.iter().find(|f| rec.has(f)).ok_or_else(|| FileError::Schema {
            path: path.to_path_buf(),
            source: SchemaError::new(rec.line, None, "no rationale, rationale_enriched or raw_text field"),
        })?;
        let text = rec.str(field).map_err(|source| FileError::Schema {
            path: path.to_path_buf(),
            source,
        })?;
        report.add(&text);
    }
    Ok(report)
}

//! Checks against published numbers and the rationale grammar, shared by
//! the integration targets and the acceptance runner.

use std::time::{Duration, Instant};

use srlm_core::analytics::{fit_log_curve, PassAtNCurve, SkillReport};
use srlm_core::grammar::{parse_rationale, SkillTag};

pub const N_VALUES: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];
pub const FIT_TOLERANCE: f64 = 0.005;

/// (label, pass@N column, published a, published b).
pub const PUBLISHED_FITS: [(&str, [f64; 7], f64, f64); 12] = [
    ("reflection-tuning MMLU", [57.08, 65.50, 71.66, 76.42, 79.79, 82.48, 84.80], 6.4535, 60.5418),
    ("reflection-tuning GSM8K", [66.49, 74.07, 80.52, 84.38, 88.10, 90.75, 92.27], 6.0944, 69.6957),
    ("reflection-tuning ARC-C", [67.32, 76.02, 82.00, 84.56, 85.75, 88.05, 89.16], 4.8088, 71.8375),
    ("reflection-tuning HellaSwag", [50.34, 60.88, 70.33, 77.81, 82.61, 86.41, 89.24], 9.2765, 54.6557),
    ("reflection-tuning BBH", [30.09, 41.55, 52.48, 61.09, 67.56, 72.79, 76.27], 11.1345, 34.2507),
    ("reflection-tuning Avg", [54.26, 63.60, 71.40, 76.85, 80.76, 84.10, 86.35], 7.5551, 58.1925),
    ("SRLM MMLU", [57.91, 69.56, 78.44, 85.41, 90.31, 93.85, 96.15], 9.0256, 62.8932),
    ("SRLM GSM8K", [67.25, 75.89, 83.85, 88.32, 91.89, 93.63, 95.38], 6.5905, 71.4682),
    ("SRLM ARC-C", [72.70, 83.02, 89.51, 93.94, 96.33, 98.12, 98.72], 5.9295, 78.0043),
    ("SRLM HellaSwag", [52.88, 64.25, 76.11, 85.46, 91.67, 95.41, 97.62], 10.9284, 57.7607),
    ("SRLM BBH", [34.06, 46.61, 57.74, 68.23, 74.87, 80.23, 83.31], 11.9599, 38.7086),
    ("SRLM Avg", [56.96, 67.87, 77.13, 84.27, 89.01, 92.25, 94.24], 8.8870, 61.7671),
];

/// Fits all twelve columns; returns the worst coefficient error and the
/// wall time taken.
pub fn published_fits() -> Result<(f64, Duration), String> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (label, ys, a, b) in PUBLISHED_FITS {
        let curve = PassAtNCurve::new(N_VALUES.to_vec(), ys.to_vec()).map_err(|e| format!("{label}: {e}"))?;
        let fit = fit_log_curve(&curve).map_err(|e| format!("{label}: {e}"))?;
        let err = (fit.a - a).abs().max((fit.b - b).abs());
        if err > FIT_TOLERANCE {
            return Err(format!("{label}: got a={:.4} b={:.4}, published a={a} b={b}", fit.a, fit.b));
        }
        worst = worst.max(err);
    }
    Ok((worst, start.elapsed()))
}

pub const CASE_STUDY_TOP_LEVEL: [SkillTag; 6] = [
    SkillTag::Decomposition,
    SkillTag::Detail,
    SkillTag::Detail,
    SkillTag::Check,
    SkillTag::Summary,
    SkillTag::Reflection,
];

/// The published SRLM rationale parses into the expected skill sequence,
/// keeps its answer after the envelope, renders back byte for byte, and
/// gives `detail` two of six tags.
pub fn case_study_example(text: &str) -> Result<(), String> {
    let tree = parse_rationale(text).map_err(|e| e.to_string())?;
    if tree.top_level_skills() != CASE_STUDY_TOP_LEVEL {
        return Err(format!("skill sequence {:?}", tree.top_level_skills()));
    }
    if tree.node_count() != CASE_STUDY_TOP_LEVEL.len() {
        return Err(format!("{} nodes, expected no nesting", tree.node_count()));
    }
    if !tree.post_thoughts().contains("\\boxed{2}") {
        return Err(format!("post-thoughts text {:?}", tree.post_thoughts()));
    }
    if tree.render() != text {
        return Err("render is not byte-identical".into());
    }
    let report = SkillReport::from_texts([text]);
    let detail = report.entry(SkillTag::Detail);
    if detail.count != 2 || (detail.fraction - 2.0 / 6.0).abs() > 1e-12 {
        return Err(format!("detail entry {detail:?}"));
    }
    Ok(())
}

/// (error class, document) pairs that must be rejected.
pub const GRAMMAR_VIOLATIONS: [(&str, &str); 8] = [
    ("missing-envelope", "<detail>x</detail>"),
    ("missing-envelope", "Answer: <thoughts><detail>x</detail></thoughts>"),
    ("unbalanced-tag", "<thoughts><detail>x</check></thoughts>"),
    ("unbalanced-tag", "<thoughts><detail>x</thoughts>"),
    ("unknown-tag", "<thoughts><hypothesis>x</hypothesis></thoughts>"),
    ("reflection-ordering", "<thoughts><reflection>hmm</reflection><detail>x</detail></thoughts>"),
    (
        "depth-exceeded",
        "<thoughts><decomposition><decomposition><decomposition><decomposition>x</decomposition></decomposition></decomposition></decomposition></thoughts>",
    ),
    ("unbalanced-tag", "<thoughts><detail>x</detail>"),
];

/// Documents on the edge of each rule that must be accepted.
pub const GRAMMAR_ACCEPTED: [&str; 5] = [
    "<thoughts><detail>x</detail><reflection>ok</reflection></thoughts>",
    "<thoughts>plain text first<reflection>then doubt</reflection></thoughts>",
    "<thoughts><decomposition><decomposition><decomposition>x</decomposition></decomposition></decomposition></thoughts>",
    "<thoughts><detail>a < b and <B> stays</detail></thoughts>",
    "\n<thoughts></thoughts>\nanswer",
];

pub fn grammar_rules() -> Result<(), String> {
    for (class, doc) in GRAMMAR_VIOLATIONS {
        match parse_rationale(doc) {
            Ok(_) => return Err(format!("accepted {doc:?}")),
            Err(e) if e.class() != class => return Err(format!("{doc:?}: {} instead of {class}", e.class())),
            Err(_) => {}
        }
    }
    for doc in GRAMMAR_ACCEPTED {
        let tree = parse_rationale(doc).map_err(|e| format!("{doc:?}: {e}"))?;
        if tree.render() != doc {
            return Err(format!("{doc:?} did not round-trip"));
        }
    }
    Ok(())
}

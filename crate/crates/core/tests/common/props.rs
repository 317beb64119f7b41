//! Property checks shared by the `properties` and `acceptance` targets.
//! Each runs a proptest runner for [`CASES`] cases and reports the first
//! failure as a string.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use srlm_core::analytics::{pass_at_n, EvalTask, MatchMode, PassAtNCurve};
use srlm_core::backend::{BackendHandle, GenerationParams, GenerationRequest, MockBackend};
use srlm_core::expansion::ExpansionCandidate;
use srlm_core::grammar::{parse_rationale, skill_histogram, SkillHistogram, SkillTag};
use srlm_core::selection::{apply_selection, decide, SelectionDecision, SelectorKind, Winner};
use srlm_core::store::{verify_chain, walk_to_root, InstructionSample, IterationDataset, IterationManifest, Provenance};

pub const CASES: u32 = 256;

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

const TEXTS: [&str; 8] = ["x = 3", "carry the one", "", " ", "\n", "a < b", "<B> bold", "so 2 > 1"];
const NON_REFLECTION: [SkillTag; 8] = [
    SkillTag::Decomposition,
    SkillTag::Backward,
    SkillTag::Detail,
    SkillTag::Summary,
    SkillTag::Alternatives,
    SkillTag::Analogy,
    SkillTag::Check,
    SkillTag::Other,
];

/// Builds a grammatical document from a stream of choices. Reflection only
/// appears after a finished non-reflection node, and decomposition never
/// nests past three.
pub struct DocBuilder<'a> {
    choices: &'a [u32],
    pos: usize,
    seen_node: bool,
    pub skills: Vec<SkillTag>,
}

impl<'a> DocBuilder<'a> {
    pub fn new(choices: &'a [u32]) -> Self {
        Self {
            choices,
            pos: 0,
            seen_node: false,
            skills: Vec::new(),
        }
    }

    fn next(&mut self) -> u32 {
        let c = self.choices.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        c
    }

    fn items(&mut self, out: &mut String, depth: usize, decomp: usize) {
        let n = if self.pos >= self.choices.len() { 0 } else { self.next() % 4 };
        for _ in 0..n {
            let c = self.next();
            if c.is_multiple_of(3) || depth >= 3 {
                out.push_str(TEXTS[(c as usize / 3) % TEXTS.len()]);
                continue;
            }
            let pick = (c / 3) as usize % 9;
            let mut skill = if pick == 8 && self.seen_node {
                SkillTag::Reflection
            } else {
                NON_REFLECTION[pick % 8]
            };
            if skill == SkillTag::Decomposition && decomp >= 3 {
                skill = SkillTag::Detail;
            }
            let d = decomp + usize::from(skill == SkillTag::Decomposition);
            out.push_str(&skill.open_tag());
            self.skills.push(skill);
            self.items(out, depth + 1, d);
            out.push_str(&skill.close_tag());
            if skill != SkillTag::Reflection {
                self.seen_node = true;
            }
        }
    }

    pub fn document(mut self) -> (String, Vec<SkillTag>) {
        let leading = ["", "\n", "  "][self.next() as usize % 3];
        let mut body = String::new();
        self.items(&mut body, 0, 0);
        let post = ["", "\nThe answer is 4.", "\n\\boxed{7}\n"][self.next() as usize % 3];
        (format!("{leading}<thoughts>{body}</thoughts>{post}"), self.skills)
    }
}

pub fn doc_strategy() -> impl Strategy<Value = (String, Vec<SkillTag>)> {
    prop::collection::vec(any::<u32>(), 0..48).prop_map(|c| DocBuilder::new(&c).document())
}

/// Grammatical documents parse, render back byte for byte, and re-parse
/// to the same tree with the skills in document order.
pub fn parse_render_identity() -> Result<(), String> {
    run(doc_strategy(), |(doc, skills)| {
        let tree = parse_rationale(&doc).map_err(|e| TestCaseError::fail(format!("{e}: {doc:?}")))?;
        let rendered = tree.render();
        prop_assert_eq!(&rendered, &doc);
        prop_assert_eq!(parse_rationale(&rendered).unwrap(), tree.clone());
        let found: Vec<SkillTag> = tree.nodes().iter().map(|n| n.skill).collect();
        let mut want = skills.clone();
        let mut got = found.clone();
        want.sort();
        got.sort();
        prop_assert_eq!(got, want);
        Ok(())
    })
}

/// Arbitrary tag soup either fails to parse or renders back unchanged.
pub fn parse_accepts_only_round_trippable() -> Result<(), String> {
    let piece = prop_oneof![
        Just("<thoughts>".to_string()),
        Just("</thoughts>".to_string()),
        Just("<hunch>".to_string()),
        Just("< detail>".to_string()),
        prop::sample::select(SkillTag::ALL.to_vec()).prop_map(|s| s.open_tag()),
        prop::sample::select(SkillTag::ALL.to_vec()).prop_map(|s| s.close_tag()),
        "[a-z <>/\n]{0,6}",
    ];
    run(prop::collection::vec(piece, 0..16), |pieces| {
        let doc = pieces.concat();
        if let Ok(tree) = parse_rationale(&doc) {
            prop_assert_eq!(tree.render(), doc);
        }
        Ok(())
    })
}

/// hist(A ++ B) = hist(A) + hist(B).
pub fn histogram_additivity() -> Result<(), String> {
    let docs = || prop::collection::vec(doc_strategy(), 0..8);
    run((docs(), docs()), |(a, b)| {
        let trees = |v: &[(String, Vec<SkillTag>)]| -> Vec<_> {
            v.iter().map(|(d, _)| parse_rationale(d).unwrap()).collect()
        };
        let (ta, tb) = (trees(&a), trees(&b));
        let joined: Vec<_> = ta.iter().chain(&tb).cloned().collect();
        prop_assert_eq!(skill_histogram(&joined), skill_histogram(&ta) + skill_histogram(&tb));
        let expected = SkillHistogram::from_counts(a.iter().chain(&b).flat_map(|(_, s)| s.iter().map(|&k| (k, 1))));
        prop_assert_eq!(skill_histogram(&joined), expected);
        Ok(())
    })
}

fn monotone_transforms(x: f64, which: u8) -> f64 {
    match which % 4 {
        0 => 3.0 * x + 7.0,
        1 => x.exp(),
        2 => x * x * x,
        _ => x.atan(),
    }
}

/// The winner depends only on the ordering of scores.
pub fn argmax_invariance() -> Result<(), String> {
    let score = (-8i32..=0).prop_map(|k| k as f64 / 4.0);
    let cands = prop::collection::vec(score.clone(), 0..6);
    run((score, cands, any::<u8>()), |(inc, cands, which)| {
        let raw: Vec<(u32, f64)> = cands.iter().enumerate().map(|(i, s)| (i as u32 + 1, *s)).collect();
        let mapped: Vec<(u32, f64)> = raw.iter().map(|(a, s)| (*a, monotone_transforms(*s, which))).collect();
        prop_assert_eq!(decide(inc, &raw), decide(monotone_transforms(inc, which), &mapped));
        Ok(())
    })
}

/// An incumbent scoring at least as well as every candidate is kept.
pub fn tie_keeps_incumbent() -> Result<(), String> {
    let score = (-6i32..=0).prop_map(|k| k as f64);
    run((score.clone(), prop::collection::vec(score, 1..6), any::<prop::sample::Index>()), |(inc, mut cands, idx)| {
        let top = cands.iter().cloned().fold(f64::MIN, f64::max);
        let i = idx.index(cands.len());
        cands[i] = top;
        let raw: Vec<(u32, f64)> = cands.iter().enumerate().map(|(i, s)| (i as u32 + 1, *s)).collect();
        let (winner, tie) = decide(top, &raw);
        prop_assert_eq!(winner, Winner::Incumbent);
        prop_assert!(tie);
        let (winner, _) = decide(inc, &raw);
        if inc >= top {
            prop_assert_eq!(winner, Winner::Incumbent);
        } else {
            let first = raw.iter().find(|(_, s)| *s == top).unwrap().0;
            prop_assert_eq!(winner, Winner::Candidate(first));
        }
        Ok(())
    })
}

fn sample_strategy(i: usize) -> impl Strategy<Value = InstructionSample> {
    ("[a-z][a-z ]{0,12}", "[a-z<>/ \n]{0,16}", "[0-9a-z\"\\\\]{1,6}").prop_map(move |(ins, rat, ans)| {
        InstructionSample::seed(format!("s-{i:03}"), ins, rat, ans)
    })
}

fn dataset_strategy() -> impl Strategy<Value = IterationDataset> {
    (1usize..12)
        .prop_flat_map(|n| (0..n).map(sample_strategy).collect::<Vec<_>>())
        .prop_map(|s| IterationDataset::new(0, s).unwrap())
}

/// Applying any complete decision set keeps size, ids, instructions and
/// answers, and takes each rationale from the chosen branch.
pub fn apply_preserves_shape() -> Result<(), String> {
    let picks = prop::collection::vec((0u32..4, any::<bool>()), 12);
    run((dataset_strategy(), picks), |(ds, picks)| {
        let mut candidates = Vec::new();
        let mut decisions = Vec::new();
        for (s, &(pick, truncated)) in ds.samples().iter().zip(&picks) {
            for a in 1..=3 {
                let text = format!("<thoughts><detail>{} try {a}</detail></thoughts>", s.id);
                let trunc = truncated && a == pick;
                candidates.push(ExpansionCandidate::from_completion(&s.id, a, text, trunc));
            }
            let winner = if pick == 0 || truncated { Winner::Incumbent } else { Winner::Candidate(pick) };
            decisions.push(SelectionDecision {
                sample_id: s.id.clone(),
                winner,
                selector: SelectorKind::Length,
                scores: BTreeMap::new(),
                tie_break_applied: false,
            });
        }
        decisions.reverse();
        let next = apply_selection(&ds, &decisions, &candidates).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(next.len(), ds.len());
        prop_assert_eq!(next.iteration(), ds.iteration() + 1);
        for ((a, b), &(pick, truncated)) in ds.samples().iter().zip(next.samples()).zip(&picks) {
            prop_assert_eq!(&a.id, &b.id);
            prop_assert_eq!(&a.instruction, &b.instruction);
            prop_assert_eq!(&a.answer, &b.answer);
            prop_assert_eq!(b.iteration, a.iteration + 1);
            if pick == 0 || truncated {
                prop_assert_eq!(&b.rationale, &a.rationale);
                prop_assert_eq!(b.provenance, Provenance::IncumbentRetained);
            } else {
                prop_assert_eq!(b.rationale.clone(), format!("<thoughts><detail>{} try {pick}</detail></thoughts>", a.id));
                prop_assert_eq!(b.provenance, Provenance::ExpansionSelected);
            }
        }
        Ok(())
    })
}

/// Datasets survive serialization with the same digest.
pub fn dataset_round_trip() -> Result<(), String> {
    run(dataset_strategy(), |ds| {
        let bytes = ds.to_jsonl_bytes();
        let back = IterationDataset::from_jsonl_str(std::str::from_utf8(&bytes).unwrap(), Path::new("mem"))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back.digest(), ds.digest());
        prop_assert_eq!(back.samples(), ds.samples());
        prop_assert_eq!(back.to_jsonl_bytes(), bytes);
        Ok(())
    })
}

fn chain(len: usize, salt: u64) -> Vec<IterationManifest> {
    let mut out: Vec<IterationManifest> = Vec::new();
    for t in 0..len {
        out.push(IterationManifest {
            iteration: t as u32,
            base_model_ref: "base".into(),
            trained_model_ref: if t + 1 < len { format!("m-{t}-{salt}") } else { String::new() },
            dataset_digest: format!("sha256:{:064x}", salt.wrapping_add(t as u64)),
            catalyst_digest: format!("sha256:{:064x}", salt ^ 0xff),
            selector: SelectorKind::OffPolicy,
            config_digest: format!("sha256:{:064x}", salt / 3),
            parent_manifest_digest: out.last().map(|m| m.digest()).unwrap_or_default(),
        });
    }
    out
}

/// Well-formed chains verify and walk back to iteration 0; changing any
/// non-final manifest or any parent link breaks verification.
pub fn manifest_chain_verification() -> Result<(), String> {
    let case = (1usize..9).prop_flat_map(|n| (Just(n), any::<u64>(), 0..n, 0u8..3));
    run(case, |(len, salt, k, field)| {
        let good = chain(len, salt);
        prop_assert!(verify_chain(&good).is_ok());
        prop_assert_eq!(walk_to_root(&good), Some(len - 1));
        let mut bad = good.clone();
        match field {
            0 if k + 1 < len => bad[k].dataset_digest.push('0'),
            1 if k + 1 < len => bad[k].trained_model_ref.push('x'),
            _ => bad[k].parent_manifest_digest = format!("sha256:{:064x}", salt ^ 1),
        }
        prop_assert!(verify_chain(&bad).is_err());
        Ok(())
    })
}

const CORRECT: &str = "<thoughts><detail>6 * 7</detail></thoughts>\n42";
const WRONG: &str = "<thoughts><detail>6 * 7</detail></thoughts>\n41";

/// pass@N from a scripted backend equals the prefix oracle and never falls
/// as N grows.
pub fn pass_at_n_monotone() -> Result<(), String> {
    let ns = prop::collection::btree_set(1u32..12, 1..5);
    let tasks = prop::collection::vec(prop::collection::vec(any::<bool>(), 11), 1..6);
    run((ns, tasks), |(ns, grid)| {
        let ns: Vec<u32> = ns.into_iter().collect();
        let max_n = *ns.last().unwrap();
        let template = GenerationRequest::new("", "", GenerationParams::default()).with_seed(5);
        let mut mock = MockBackend::new();
        let mut tasks = Vec::new();
        for (i, row) in grid.iter().enumerate() {
            let task = EvalTask {
                id: format!("t{i}"),
                prompt: format!("what is 6 * 7? ({i})"),
                expected_answer: "42".into(),
                match_mode: MatchMode::Numeric,
            };
            let mut req = template.clone().with_samples(max_n);
            req.user_prompt = task.prompt.clone();
            let outs: Vec<&str> = row[..max_n as usize].iter().map(|&c| if c { CORRECT } else { WRONG }).collect();
            mock.script_generation("m", &req, &outs);
            tasks.push(task);
        }
        let handle = BackendHandle::new(Arc::new(mock), "m");
        let curve = pass_at_n(&tasks, &handle, &ns, &template).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (i, &n) in ns.iter().enumerate() {
            let hits = grid.iter().filter(|row| row[..n as usize].iter().any(|&c| c)).count();
            let want = 100.0 * hits as f64 / grid.len() as f64;
            prop_assert!((curve.accuracy()[i] - want).abs() < 1e-9);
        }
        prop_assert!(curve.accuracy().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(PassAtNCurve::new(ns.clone(), curve.accuracy().to_vec()).is_ok());
        Ok(())
    })
}

pub type Check = fn() -> Result<(), String>;

pub const SUITES: [(&str, Check); 10] = [
    ("parse/render identity", parse_render_identity),
    ("parser accepts only round-trippable input", parse_accepts_only_round_trippable),
    ("histogram additivity", histogram_additivity),
    ("argmax invariant under increasing transforms", argmax_invariance),
    ("ties keep the incumbent", tie_keeps_incumbent),
    ("selection preserves size and answers", apply_preserves_shape),
    ("dataset serialization round trip", dataset_round_trip),
    ("manifest chain verification", manifest_chain_verification),
    ("pass@N monotone in N", pass_at_n_monotone),
    ("incumbent-only run keeps dataset content", incumbent_only_fixed_point),
];

/// A selection round in which every decision keeps the incumbent changes
/// only iteration and provenance.
pub fn incumbent_only_fixed_point() -> Result<(), String> {
    run(dataset_strategy(), |ds| {
        let decisions: Vec<_> = ds
            .samples()
            .iter()
            .map(|s| SelectionDecision {
                sample_id: s.id.clone(),
                winner: Winner::Incumbent,
                selector: SelectorKind::OffPolicy,
                scores: BTreeMap::new(),
                tie_break_applied: true,
            })
            .collect();
        let next = apply_selection(&ds, &decisions, &[]).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (a, b) in ds.samples().iter().zip(next.samples()) {
            prop_assert_eq!((&a.id, &a.instruction, &a.rationale, &a.answer), (&b.id, &b.instruction, &b.rationale, &b.answer));
        }
        Ok(())
    })
}

#![allow(dead_code)]

pub mod criteria;
pub mod golden;
pub mod props;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use srlm_core::backend::{Backend, BackendError, BackendKind, Completion, GenerationRequest, ScoreRequest};
use srlm_core::grammar::parse_rationale;
use srlm_core::orchestrator::{RunConfig, RunPaths};
use srlm_core::selection::SelectorKind;

pub const GOLDEN_SELECTORS: [SelectorKind; 3] = [SelectorKind::Length, SelectorKind::OffPolicy, SelectorKind::OnPolicy];
pub const GOLDEN_SEED: u64 = 20240611;
pub const GOLDEN_SAMPLES: u32 = 12;
pub const GOLDEN_ITERATIONS: u32 = 2;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn golden_dir(selector: SelectorKind) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(selector.as_str())
}

pub fn golden_fixture() -> PathBuf {
    fixtures().join("golden_mock.jsonl")
}

pub fn case_study() -> String {
    std::fs::read_to_string(fixtures().join("case_study.txt")).unwrap()
}

pub fn blessing() -> bool {
    std::env::var("SRLM_BLESS").is_ok_and(|v| v == "1")
}

/// Config for the toy golden run rooted at `workspace`.
pub fn toy_config(selector: SelectorKind, workspace: &Path) -> RunConfig {
    let mut c = RunConfig::new(
        "toy-base",
        selector,
        RunPaths {
            workspace: workspace.to_path_buf(),
            catalyst: fixtures().join("toy_catalyst.jsonl"),
            dataset0: fixtures().join("toy_dataset.jsonl"),
        },
    );
    c.max_iterations = GOLDEN_ITERATIONS;
    c.run_seed = GOLDEN_SEED;
    c.expansion.seed = GOLDEN_SEED;
    c.expansion.n_samples = GOLDEN_SAMPLES;
    c.expansion.concurrency_limit = 4;
    c
}

fn h64(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

const TAGS: [&str; 8] = [
    "decomposition",
    "detail",
    "check",
    "summary",
    "backward",
    "alternatives",
    "analogy",
    "other",
];

const WORDS: [&str; 12] = [
    "first", "carry", "the", "digit", "then", "compare", "both", "sides", "again", "so", "it", "holds",
];

/// Deterministic stand-in for a model: output depends only on the request.
/// About one in ten completions lacks an envelope, one in ten uses an
/// unknown tag and one in twenty is cut off by the token limit.
pub struct ScriptedBackend;

impl ScriptedBackend {
    pub fn completion(model: &str, req: &GenerationRequest, index: u32) -> Completion {
        let seed = req.seed.unwrap_or(0).to_string();
        let h = h64(&[model, &req.user_prompt, &seed, &index.to_string()]);
        let words = |salt: u64, n: u64| -> String {
            (0..n)
                .map(|i| WORDS[((salt >> (i % 16)) as usize + i as usize) % WORDS.len()])
                .collect::<Vec<_>>()
                .join(" ")
        };
        let text = match h % 10 {
            0 => format!("The answer follows directly: {}.", words(h >> 7, 4)),
            1 => format!("<thoughts><hypothesis>{}</hypothesis></thoughts>", words(h >> 9, 3)),
            _ => {
                let parts = 1 + (h >> 4) % 4;
                let mut body = String::new();
                for i in 0..parts {
                    let salt = h >> (8 + 3 * i);
                    let tag = if i > 0 && salt.is_multiple_of(5) { "reflection" } else { TAGS[(salt % 8) as usize] };
                    let n = 2 + (salt >> 3) % 9;
                    body.push_str(&format!("<{tag}>{}</{tag}>", words(salt, n)));
                    if (salt >> 6).is_multiple_of(3) {
                        body.push('\n');
                    }
                }
                let tail = if (h >> 40).is_multiple_of(2) { "\nSo that is the answer." } else { "" };
                format!("<thoughts>{body}</thoughts>{tail}")
            }
        };
        Completion {
            text,
            truncated: (h >> 50).is_multiple_of(20),
        }
    }

    /// Per-token logprobs in eighths, so sums are exact and ties happen.
    pub fn logprobs(req: &ScoreRequest) -> Vec<f64> {
        let h = h64(&[&req.model_ref, &req.context, &req.continuation]);
        let tokens = 1 + h % 3;
        (0..tokens)
            .map(|i| -(((h >> (4 + 4 * i)) % 12 + 1) as f64) / 8.0)
            .collect()
    }
}

impl Backend for ScriptedBackend {
    fn generate(&self, model: &str, req: &GenerationRequest) -> Result<Vec<Completion>, BackendError> {
        Ok((0..req.n_samples).map(|i| Self::completion(model, req, i)).collect())
    }

    fn score(&self, req: &ScoreRequest) -> Result<Vec<f64>, BackendError> {
        Ok(Self::logprobs(req))
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

/// Mock fixture lines keyed by request digest, read without the crate's
/// loader.
pub fn fixture_logprobs(path: &Path) -> HashMap<String, Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            let lp = v.get("logprobs")?.as_array()?.first()?.clone();
            let lp: Vec<f64> = serde_json::from_value(lp).unwrap();
            Some((v["request_digest"].as_str().unwrap().to_string(), lp))
        })
        .collect()
}

/// Scoring-request digest computed from the wire layout directly.
pub fn oracle_score_digest(model: &str, context: &str, continuation: &str) -> String {
    let s = |x: &str| serde_json::to_string(x).unwrap();
    let json = format!(
        "{{\"kind\":\"score\",\"model\":{},\"context\":{},\"continuation\":{}}}",
        s(model),
        s(context),
        s(continuation)
    );
    format!("sha256:{}", hex::encode(Sha256::digest(json.as_bytes())))
}

/// One sample as the oracle sees it.
pub struct OracleSample {
    pub id: String,
    pub instruction: String,
    pub rationale: String,
    pub answer: String,
}

pub struct OracleCandidate {
    pub sample_id: String,
    pub attempt: u32,
    pub raw_text: String,
    pub truncated: bool,
}

pub fn read_jsonl(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn oracle_samples(path: &Path) -> Vec<OracleSample> {
    read_jsonl(path)
        .into_iter()
        .map(|v| OracleSample {
            id: v["id"].as_str().unwrap().into(),
            instruction: v["instruction"].as_str().unwrap().into(),
            rationale: v["rationale"].as_str().unwrap().into(),
            answer: v["answer"].as_str().unwrap().into(),
        })
        .collect()
}

pub fn oracle_candidates(path: &Path) -> Vec<OracleCandidate> {
    read_jsonl(path)
        .into_iter()
        .map(|v| OracleCandidate {
            sample_id: v["sample_id"].as_str().unwrap().into(),
            attempt: v["attempt"].as_u64().unwrap() as u32,
            raw_text: v["raw_text"].as_str().unwrap().into(),
            truncated: v["truncated"].as_bool().unwrap(),
        })
        .collect()
}

/// Winner per sample id: `None` for the incumbent, else the attempt.
///
/// Brute force: every branch gets a score, the incumbent keeps any tie,
/// and among tied candidates the lowest attempt wins.
pub fn oracle_decide(
    samples: &[OracleSample],
    candidates: &[OracleCandidate],
    score: impl Fn(&OracleSample, &str) -> f64,
) -> HashMap<String, Option<u32>> {
    samples
        .iter()
        .map(|s| {
            let incumbent = score(s, &s.rationale);
            let mut best: Option<(u32, f64)> = None;
            for c in candidates.iter().filter(|c| c.sample_id == s.id) {
                if c.truncated || parse_rationale(&c.raw_text).is_err() {
                    continue;
                }
                let v = score(s, &c.raw_text);
                let better = match best {
                    None => true,
                    Some((a, b)) => v > b || (v == b && c.attempt < a),
                };
                if better {
                    best = Some((c.attempt, v));
                }
            }
            let winner = best.filter(|&(_, v)| v > incumbent).map(|(a, _)| a);
            (s.id.clone(), winner)
        })
        .collect()
}

/// Log-probability score read straight from fixture entries.
pub fn fixture_score<'a>(
    fixture: &'a HashMap<String, Vec<f64>>,
    model: &'a str,
) -> impl Fn(&OracleSample, &str) -> f64 + 'a {
    move |s, rationale| {
        let context = format!("{}\n\n{}\n\n", s.instruction, rationale);
        let key = oracle_score_digest(model, &context, &s.answer);
        let lp = fixture.get(&key).unwrap_or_else(|| panic!("fixture lacks score for {}", s.id));
        lp.iter().sum()
    }
}

pub fn char_score(_: &OracleSample, rationale: &str) -> f64 {
    rationale.chars().count() as f64
}

/// Winners recorded in a decisions file.
pub fn recorded_winners(path: &Path) -> HashMap<String, Option<u32>> {
    read_jsonl(path)
        .into_iter()
        .map(|v| {
            let w = v["winner"].as_str().unwrap();
            let attempt = w.strip_prefix("candidate:").map(|a| a.parse().unwrap());
            (v["sample_id"].as_str().unwrap().to_string(), attempt)
        })
        .collect()
}

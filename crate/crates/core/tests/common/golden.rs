use std::path::Path;
use std::sync::Arc;

use srlm_core::backend::{Backend, MockBackend, Recorder, RetryPolicy};
use srlm_core::orchestrator::Pipeline;
use srlm_core::selection::SelectorKind;

use super::*;

/// Files compared byte for byte against the golden copies.
pub const GOLDEN_FILES: [&str; 6] = [
    "iter-000/manifest.json",
    "iter-001/manifest.json",
    "iter-002/manifest.json",
    "iter-002/dataset.jsonl",
    "iter-000/decisions.jsonl",
    "iter-001/decisions.jsonl",
];

pub fn run_toy(selector: SelectorKind, backend: Arc<dyn Backend>, workspace: &Path) -> Result<(), String> {
    Pipeline::new(toy_config(selector, workspace), backend)
        .map_err(|e| e.to_string())?
        .with_retry(RetryPolicy::immediate(0))
        .run(false)
        .map(|_| ())
        .map_err(|e| e.to_string())
}

/// Regenerates the mock fixture from the scripted backend and rewrites the
/// golden files from a replay of that fixture.
pub fn bless() {
    let recorder = Arc::new(Recorder::new(ScriptedBackend));
    for sel in GOLDEN_SELECTORS {
        let dir = tempfile::tempdir().unwrap();
        run_toy(sel, recorder.clone(), dir.path()).unwrap();
    }
    std::fs::write(golden_fixture(), recorder.to_fixture_jsonl()).unwrap();
    for sel in GOLDEN_SELECTORS {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockBackend::from_fixture_file(&golden_fixture()).unwrap();
        run_toy(sel, Arc::new(mock), dir.path()).unwrap();
        for f in GOLDEN_FILES {
            let dst = golden_dir(sel).join(f);
            std::fs::create_dir_all(dst.parent().unwrap()).unwrap();
            std::fs::copy(dir.path().join(f), dst).unwrap();
        }
    }
}

/// Replays the fixture for `selector`, compares every golden file and
/// checks each decision against the brute-force oracle.
pub fn check_golden(selector: SelectorKind) -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockBackend::from_fixture_file(&golden_fixture()).map_err(|e| e.to_string())?;
    run_toy(selector, Arc::new(mock), dir.path())?;
    for f in GOLDEN_FILES {
        let got = std::fs::read(dir.path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        let want = std::fs::read(golden_dir(selector).join(f)).map_err(|e| format!("golden {f}: {e}"))?;
        if got != want {
            return Err(format!("{selector}: {f} differs from golden copy"));
        }
    }
    let fixture = fixture_logprobs(&golden_fixture());
    for t in 0..GOLDEN_ITERATIONS {
        let iter = dir.path().join(format!("iter-{t:03}"));
        let samples = oracle_samples(&iter.join("dataset.jsonl"));
        let candidates = oracle_candidates(&iter.join("candidates.jsonl"));
        // Off-policy scores under the base model; on-policy under M_t,
        // which the noop hook makes the base model too.
        let expected = match selector {
            SelectorKind::Length => oracle_decide(&samples, &candidates, char_score),
            _ => oracle_decide(&samples, &candidates, fixture_score(&fixture, "toy-base")),
        };
        let recorded = recorded_winners(&iter.join("decisions.jsonl"));
        if recorded != expected {
            let diff: Vec<_> = expected
                .iter()
                .filter(|(id, w)| recorded.get(*id) != Some(w))
                .map(|(id, w)| format!("{id}: oracle {w:?} vs {:?}", recorded.get(id)))
                .collect();
            return Err(format!("{selector} iteration {t}: {}", diff.join("; ")));
        }
        let next = oracle_samples(&dir.path().join(format!("iter-{:03}/dataset.jsonl", t + 1)));
        for (s, n) in samples.iter().zip(&next) {
            let want = match expected[&s.id] {
                None => s.rationale.clone(),
                Some(a) => candidates
                    .iter()
                    .find(|c| c.sample_id == s.id && c.attempt == a)
                    .unwrap()
                    .raw_text
                    .clone(),
            };
            if n.rationale != want || n.answer != s.answer || n.id != s.id {
                return Err(format!("{selector}: D^{} entry {} is not what the oracle built", t + 1, s.id));
            }
        }
    }
    Ok(())
}

pub fn fixture_entries() -> usize {
    std::fs::read_to_string(golden_fixture()).map(|t| t.lines().count()).unwrap_or(0)
}

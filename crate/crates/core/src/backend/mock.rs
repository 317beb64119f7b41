//! Scripted backend for reproducible runs, plus a recorder that captures any
//! backend's traffic as a replayable fixture.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::request::{generation_digest, score_digest, Completion, GenerationRequest, ScoreRequest};
use super::{Backend, BackendError};
use crate::jsonl::{self, FileError};

/// One line of a mock fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub request_digest: String,
    #[serde(default)]
    pub completions: Vec<String>,
    #[serde(default)]
    pub logprobs: Vec<Vec<f64>>,
    /// Per-completion truncation flags; absent means none truncated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truncated: Vec<bool>,
}

/// Backend answering from a fixture keyed by request digest.
#[derive(Debug, Default)]
pub struct MockBackend {
    entries: HashMap<String, FixtureEntry>,
    pending_failures: AtomicU32,
    calls: AtomicU32,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        let mut mock = Self::new();
        for e in entries {
            mock.insert(e);
        }
        mock
    }

    pub fn from_fixture_file(path: &Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: FixtureEntry = serde_json::from_str(line).map_err(|e| FileError::Schema {
                path: path.to_path_buf(),
                source: jsonl::SchemaError::new(i + 1, None, e.to_string()),
            })?;
            entries.push(entry);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn insert(&mut self, entry: FixtureEntry) {
        self.entries.insert(entry.request_digest.clone(), entry);
    }

    /// Scripts the completions returned for a generation request.
    pub fn script_generation(&mut self, model: &str, req: &GenerationRequest, completions: &[&str]) {
        self.insert(FixtureEntry {
            request_digest: generation_digest(model, req),
            completions: completions.iter().map(|s| s.to_string()).collect(),
            logprobs: Vec::new(),
            truncated: Vec::new(),
        });
    }

    /// Scripts the per-token logprobs returned for a scoring request.
    pub fn script_score(&mut self, req: &ScoreRequest, token_logprobs: &[f64]) {
        self.insert(FixtureEntry {
            request_digest: score_digest(req),
            completions: Vec::new(),
            logprobs: vec![token_logprobs.to_vec()],
            truncated: Vec::new(),
        });
    }

    /// The next `n` calls fail with a transport error before consulting the
    /// fixture.
    pub fn fail_next(&self, n: u32) {
        self.pending_failures.store(n, Ordering::SeqCst);
    }

    /// Total calls received, including injected failures.
    pub fn calls(&self) -> u32 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn injected_failure(&self) -> Result<(), BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let took = self
            .pending_failures
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1));
        match took {
            Ok(_) => Err(BackendError::Transport("injected transport failure".into())),
            Err(_) => Ok(()),
        }
    }

    fn lookup(&self, digest: &str) -> Result<&FixtureEntry, BackendError> {
        self.entries
            .get(digest)
            .ok_or_else(|| BackendError::MissingFixture(digest.to_string()))
    }
}

impl Backend for MockBackend {
    fn generate(&self, model: &str, req: &GenerationRequest) -> Result<Vec<Completion>, BackendError> {
        self.injected_failure()?;
        let entry = self.lookup(&generation_digest(model, req))?;
        let n = req.n_samples as usize;
        if entry.completions.len() < n {
            return Err(BackendError::InvalidResponse(format!(
                "fixture has {} completions, request wants {n}",
                entry.completions.len()
            )));
        }
        Ok(entry.completions[..n]
            .iter()
            .enumerate()
            .map(|(i, text)| Completion {
                text: text.clone(),
                truncated: entry.truncated.get(i).copied().unwrap_or(false),
            })
            .collect())
    }

    fn score(&self, req: &ScoreRequest) -> Result<Vec<f64>, BackendError> {
        self.injected_failure()?;
        let entry = self.lookup(&score_digest(req))?;
        entry
            .logprobs
            .first()
            .cloned()
            .ok_or_else(|| BackendError::InvalidResponse("fixture entry has no logprobs".into()))
    }

    fn kind(&self) -> super::BackendKind {
        super::BackendKind::Mock
    }
}

/// Wraps a backend and records every successful exchange as a fixture
/// entry.
pub struct Recorder<B> {
    inner: B,
    recorded: Mutex<HashMap<String, FixtureEntry>>,
}

impl<B: Backend> Recorder<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            recorded: Mutex::new(HashMap::new()),
        }
    }

    /// Recorded entries sorted by digest.
    pub fn entries(&self) -> Vec<FixtureEntry> {
        let mut out: Vec<_> = self.recorded.lock().expect("recorder poisoned").values().cloned().collect();
        out.sort_by(|a, b| a.request_digest.cmp(&b.request_digest));
        out
    }

    pub fn to_fixture_jsonl(&self) -> Vec<u8> {
        jsonl::to_jsonl(&self.entries())
    }

    fn record(&self, entry: FixtureEntry) {
        self.recorded
            .lock()
            .expect("recorder poisoned")
            .insert(entry.request_digest.clone(), entry);
    }
}

impl<B: Backend> Backend for Recorder<B> {
    fn generate(&self, model: &str, req: &GenerationRequest) -> Result<Vec<Completion>, BackendError> {
        let out = self.inner.generate(model, req)?;
        let truncated = if out.iter().any(|c| c.truncated) {
            out.iter().map(|c| c.truncated).collect()
        } else {
            Vec::new()
        };
        self.record(FixtureEntry {
            request_digest: generation_digest(model, req),
            completions: out.iter().map(|c| c.text.clone()).collect(),
            logprobs: Vec::new(),
            truncated,
        });
        Ok(out)
    }

    fn score(&self, req: &ScoreRequest) -> Result<Vec<f64>, BackendError> {
        let out = self.inner.score(req)?;
        self.record(FixtureEntry {
            request_digest: score_digest(req),
            completions: Vec::new(),
            logprobs: vec![out.clone()],
            truncated: Vec::new(),
        });
        Ok(out)
    }

    fn kind(&self) -> super::BackendKind {
        self.inner.kind()
    }
}

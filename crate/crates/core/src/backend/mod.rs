//! Language-model backend gateway.
//!
//! Two contracts sit behind [`Backend`]: sampled generation and
//! forced-continuation log-probability scoring. [`BackendHandle`] binds a
//! backend to a model reference and adds retries, an in-flight limit and
//! request accounting. [`MockBackend`] replays scripted fixtures so every
//! downstream stage is bit-reproducible.

mod live;
mod mock;
mod request;
mod retry;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use live::{
    ChatMessage, Choice, GenerateBody, GenerateResponse, LiveBackend, ScoreBody, ScoreResponse, ENV_BACKEND_TOKEN,
    ENV_BACKEND_URL,
};
pub use mock::{FixtureEntry, MockBackend, Recorder};
pub use request::{
    generation_digest, score_digest, Completion, GenerationParams, GenerationRequest, ScoreRequest, ScoreResult,
};
pub use retry::{InFlightLimit, RetryPolicy};

pub const DEFAULT_CONCURRENCY_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend refused request (HTTP {status}): {message}")]
    Refusal { status: u16, message: String },
    #[error("unsupported capability: {0}")]
    Unsupported(String),
    #[error("no fixture entry for request digest {0}")]
    MissingFixture(String),
    #[error("invalid backend response: {0}")]
    InvalidResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Live,
    Mock,
}

/// A model-serving endpoint. Implementations must be safe to call from many
/// threads at once.
pub trait Backend: Send + Sync {
    fn generate(&self, model: &str, req: &GenerationRequest) -> Result<Vec<Completion>, BackendError>;

    /// Per-token natural-log probabilities of `req.continuation` given
    /// `req.context`.
    fn score(&self, req: &ScoreRequest) -> Result<Vec<f64>, BackendError>;

    fn kind(&self) -> BackendKind;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn generate(&self, model: &str, req: &GenerationRequest) -> Result<Vec<Completion>, BackendError> {
        (**self).generate(model, req)
    }

    fn score(&self, req: &ScoreRequest) -> Result<Vec<f64>, BackendError> {
        (**self).score(req)
    }

    fn kind(&self) -> BackendKind {
        (**self).kind()
    }
}

#[derive(Debug, Default)]
struct Stats {
    requests: AtomicU64,
    retries: AtomicU64,
}

/// A backend bound to one model reference.
///
/// Clones (and [`BackendHandle::with_model`] derivatives) share the
/// backend, the in-flight limit and the counters.
#[derive(Clone)]
pub struct BackendHandle {
    backend: Arc<dyn Backend>,
    model_ref: String,
    retry: RetryPolicy,
    limit: Arc<InFlightLimit>,
    stats: Arc<Stats>,
}

impl fmt::Debug for BackendHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackendHandle")
            .field("model_ref", &self.model_ref)
            .field("kind", &self.backend.kind())
            .field("retry", &self.retry)
            .field("concurrency_limit", &self.limit.capacity())
            .finish()
    }
}

impl BackendHandle {
    pub fn new(backend: Arc<dyn Backend>, model_ref: impl Into<String>) -> Self {
        Self {
            backend,
            model_ref: model_ref.into(),
            retry: RetryPolicy::default(),
            limit: Arc::new(InFlightLimit::new(DEFAULT_CONCURRENCY_LIMIT)),
            stats: Arc::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_concurrency_limit(mut self, limit: usize) -> Self {
        self.limit = Arc::new(InFlightLimit::new(limit));
        self
    }

    /// Same backend, limits and counters; different model.
    pub fn with_model(&self, model_ref: impl Into<String>) -> Self {
        Self {
            model_ref: model_ref.into(),
            ..self.clone()
        }
    }

    pub fn model_ref(&self) -> &str {
        &self.model_ref
    }

    pub fn kind(&self) -> BackendKind {
        self.backend.kind()
    }

    pub fn concurrency_limit(&self) -> usize {
        self.limit.capacity()
    }

    pub fn request_count(&self) -> u64 {
        self.stats.requests.load(Ordering::SeqCst)
    }

    pub fn retry_count(&self) -> u64 {
        self.stats.retries.load(Ordering::SeqCst)
    }

    fn call<T>(&self, op: impl FnMut() -> Result<T, BackendError>) -> Result<T, BackendError> {
        let _permit = self.limit.acquire();
        self.stats.requests.fetch_add(1, Ordering::SeqCst);
        let (result, retries) = self.retry.run(op);
        self.stats.retries.fetch_add(retries as u64, Ordering::SeqCst);
        result
    }

    /// Returns exactly `req.n_samples` completions.
    pub fn generate(&self, req: &GenerationRequest) -> Result<Vec<Completion>, BackendError> {
        req.validate().map_err(BackendError::InvalidRequest)?;
        let out = self.call(|| self.backend.generate(&self.model_ref, req))?;
        if out.len() != req.n_samples as usize {
            return Err(BackendError::InvalidResponse(format!(
                "expected {} completions, got {}",
                req.n_samples,
                out.len()
            )));
        }
        Ok(out)
    }

    /// Total log-probability of `continuation` following `context` under
    /// this handle's model.
    pub fn score_continuation(&self, context: &str, continuation: &str) -> Result<ScoreResult, BackendError> {
        if continuation.is_empty() {
            return Err(BackendError::InvalidRequest("continuation must be nonempty".into()));
        }
        let req = ScoreRequest {
            model_ref: self.model_ref.clone(),
            context: context.to_string(),
            continuation: continuation.to_string(),
        };
        let logprobs = self.call(|| self.backend.score(&req))?;
        ScoreResult::from_token_logprobs(&logprobs).map_err(BackendError::InvalidResponse)
    }
}

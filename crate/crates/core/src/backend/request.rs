use serde::{Deserialize, Serialize};

use crate::digest::digest_json;

/// Sampling parameters shared by every generation call of a stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.2,
            top_p: 0.9,
            max_tokens: 8192,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub n_samples: u32,
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(system_prompt: impl Into<String>, user_prompt: impl Into<String>, params: GenerationParams) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_tokens,
            n_samples: 1,
            seed: None,
        }
    }

    pub fn with_samples(mut self, n: u32) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            top_p: self.top_p,
            max_tokens: self.max_tokens,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.params().validate()?;
        if self.n_samples == 0 {
            return Err("n_samples must be >= 1".into());
        }
        Ok(())
    }
}

/// One generated completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// The backend stopped at `max_tokens`.
    pub truncated: bool,
}

impl Completion {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            truncated: false,
        }
    }
}

/// Forced-continuation scoring: log P(continuation | context) under a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub model_ref: String,
    pub context: String,
    pub continuation: String,
}

/// Summed natural-log probability of the continuation tokens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreResult {
    pub total_logprob: f64,
    pub token_count: usize,
}

impl ScoreResult {
    /// Sums per-token log-probabilities. Rejects empty, positive or
    /// non-finite entries.
    pub fn from_token_logprobs(logprobs: &[f64]) -> Result<Self, String> {
        if logprobs.is_empty() {
            return Err("no continuation token logprobs returned".into());
        }
        if let Some(bad) = logprobs.iter().find(|l| !l.is_finite() || **l > 0.0) {
            return Err(format!("invalid token logprob {bad}"));
        }
        Ok(Self {
            total_logprob: logprobs.iter().sum(),
            token_count: logprobs.len(),
        })
    }
}

#[derive(Serialize)]
struct GenerationKey<'a> {
    kind: &'static str,
    model: &'a str,
    system_prompt: &'a str,
    user_prompt: &'a str,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    n: u32,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ScoreKey<'a> {
    kind: &'static str,
    model: &'a str,
    context: &'a str,
    continuation: &'a str,
}

/// Digest identifying a generation request; keys the mock fixture.
pub fn generation_digest(model: &str, req: &GenerationRequest) -> String {
    digest_json(&GenerationKey {
        kind: "generate",
        model,
        system_prompt: &req.system_prompt,
        user_prompt: &req.user_prompt,
        temperature: req.temperature,
        top_p: req.top_p,
        max_tokens: req.max_tokens,
        n: req.n_samples,
        seed: req.seed,
    })
}

/// Digest identifying a scoring request; keys the mock fixture.
pub fn score_digest(req: &ScoreRequest) -> String {
    digest_json(&ScoreKey {
        kind: "score",
        model: &req.model_ref,
        context: &req.context,
        continuation: &req.continuation,
    })
}

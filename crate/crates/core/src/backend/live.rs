//! HTTP backend speaking the chat-completions-style generation endpoint and
//! the continuation-scoring endpoint.
//!
//! `POST {base}/generate` with `{model, messages, temperature, top_p,
//! max_tokens, n, seed?}` answers `{choices: [{text, finish_reason}]}`.
//! `POST {base}/score` with `{model, context, continuation}` answers
//! `{token_logprobs: [real]}`.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::request::{Completion, GenerationRequest, ScoreRequest};
use super::{Backend, BackendError, BackendKind};

pub const ENV_BACKEND_URL: &str = "SRLM_BACKEND_URL";
pub const ENV_BACKEND_TOKEN: &str = "SRLM_BACKEND_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateBody {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

impl GenerateBody {
    pub fn from_request(model: &str, req: &GenerationRequest) -> Self {
        let mut messages = Vec::with_capacity(2);
        if !req.system_prompt.is_empty() {
            messages.push(ChatMessage {
                role: "system".into(),
                content: req.system_prompt.clone(),
            });
        }
        messages.push(ChatMessage {
            role: "user".into(),
            content: req.user_prompt.clone(),
        });
        Self {
            model: model.to_string(),
            messages,
            temperature: req.temperature,
            top_p: req.top_p,
            max_tokens: req.max_tokens,
            n: req.n_samples,
            seed: req.seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct GenerateResponse {
    pub choices: Vec<Choice>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Choice {
    pub text: String,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBody {
    pub model: String,
    pub context: String,
    pub continuation: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScoreResponse {
    pub token_logprobs: Vec<f64>,
}

pub struct LiveBackend {
    base_url: String,
    token: Option<String>,
    client: Client,
}

impl LiveBackend {
    pub fn new(base_url: &str, token: Option<String>, timeout: Duration) -> Result<Self, BackendError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(format!("building HTTP client: {e}")))?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            token: token.filter(|t| !t.is_empty()),
            client,
        })
    }

    /// Reads `SRLM_BACKEND_URL` and `SRLM_BACKEND_TOKEN`.
    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var(ENV_BACKEND_URL)
            .map_err(|_| BackendError::Transport(format!("{ENV_BACKEND_URL} is not set")))?;
        Self::new(&url, std::env::var(ENV_BACKEND_TOKEN).ok(), Duration::from_secs(600))
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post<T: Serialize>(&self, path: &str, body: &T) -> Result<(StatusCode, String), BackendError> {
        let mut req = self.client.post(format!("{}{path}", self.base_url)).json(body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| BackendError::Transport(format!("reading body: {e}")))?;
        Ok((status, text))
    }
}

fn status_error(status: StatusCode, body: &str) -> BackendError {
    if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS || status == StatusCode::REQUEST_TIMEOUT {
        BackendError::Transport(format!("HTTP {status}: {body}"))
    } else {
        BackendError::Refusal {
            status: status.as_u16(),
            message: body.to_string(),
        }
    }
}

impl Backend for LiveBackend {
    fn generate(&self, model: &str, req: &GenerationRequest) -> Result<Vec<Completion>, BackendError> {
        let (status, text) = self.post("/generate", &GenerateBody::from_request(model, req))?;
        if !status.is_success() {
            return Err(status_error(status, &text));
        }
        let parsed: GenerateResponse = serde_json::from_str(&text)
            .map_err(|e| BackendError::InvalidResponse(format!("generation response: {e}")))?;
        Ok(parsed
            .choices
            .into_iter()
            .map(|c| Completion {
                truncated: c.finish_reason.as_deref() == Some("length"),
                text: c.text,
            })
            .collect())
    }

    fn score(&self, req: &ScoreRequest) -> Result<Vec<f64>, BackendError> {
        let body = ScoreBody {
            model: req.model_ref.clone(),
            context: req.context.clone(),
            continuation: req.continuation.clone(),
        };
        let (status, text) = self.post("/score", &body)?;
        if status == StatusCode::NOT_FOUND || status == StatusCode::NOT_IMPLEMENTED {
            return Err(BackendError::Unsupported(format!(
                "backend does not provide continuation logprobs (HTTP {status})"
            )));
        }
        if !status.is_success() {
            return Err(status_error(status, &text));
        }
        let parsed: ScoreResponse = serde_json::from_str(&text)
            .map_err(|e| BackendError::InvalidResponse(format!("scoring response: {e}")))?;
        Ok(parsed.token_logprobs)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }
}

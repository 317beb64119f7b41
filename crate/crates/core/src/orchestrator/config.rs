use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use super::hook::TrainerHook;
use super::OrchestratorError;
use crate::backend::{Backend, BackendError, GenerationParams, LiveBackend, MockBackend, DEFAULT_CONCURRENCY_LIMIT};
use crate::catalyst::{CatalystUpdate, META_PROMPT_VERSION};
use crate::digest::{digest_json, DIGEST_ALGORITHM};
use crate::expansion::ExpansionConfig;
use crate::selection::{LengthMetric, SelectorKind, SCORING_CONTEXT_VERSION};

pub const DEFAULT_MAX_ITERATIONS: u32 = 5;
const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

/// Where a run reads its inputs and writes its artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub workspace: PathBuf,
    pub catalyst: PathBuf,
    pub dataset0: PathBuf,
}

/// How to reach the generation/scoring backend.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackendConfig {
    pub url: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    /// Mock fixture; when set no network backend is used.
    pub fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub base_model_ref: String,
    pub selector: SelectorKind,
    pub max_iterations: u32,
    pub expansion: ExpansionConfig,
    pub trainer_hook: TrainerHook,
    pub run_seed: u64,
    pub length_metric: LengthMetric,
    pub update_catalyst: CatalystUpdate,
    pub paths: RunPaths,
    pub backend: BackendConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathTable {
    path: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackendTable {
    url: Option<String>,
    token_env: Option<String>,
    fixture: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    base_model_ref: String,
    selector: SelectorKind,
    #[serde(default = "default_max_iterations")]
    max_iterations: u32,
    #[serde(default = "default_n_samples")]
    n_samples: u32,
    temperature: Option<f64>,
    top_p: Option<f64>,
    max_tokens: Option<u32>,
    #[serde(default = "default_concurrency")]
    concurrency_limit: usize,
    #[serde(default)]
    run_seed: u64,
    trainer_hook: String,
    #[serde(default = "default_tie_break")]
    tie_break: String,
    #[serde(default)]
    length_metric: LengthMetric,
    #[serde(default)]
    update_catalyst: CatalystUpdate,
    workspace: PathBuf,
    #[serde(default)]
    backend: BackendTable,
    catalyst: PathTable,
    dataset0: PathTable,
}

fn default_max_iterations() -> u32 {
    DEFAULT_MAX_ITERATIONS
}

fn default_n_samples() -> u32 {
    5
}

fn default_concurrency() -> usize {
    DEFAULT_CONCURRENCY_LIMIT
}

fn default_tie_break() -> String {
    "incumbent".into()
}

impl RunConfig {
    /// A config with every tunable at its default.
    pub fn new(base_model_ref: impl Into<String>, selector: SelectorKind, paths: RunPaths) -> Self {
        Self {
            base_model_ref: base_model_ref.into(),
            selector,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            expansion: ExpansionConfig::default(),
            trainer_hook: TrainerHook::Noop,
            run_seed: 0,
            length_metric: LengthMetric::Chars,
            update_catalyst: CatalystUpdate::Off,
            paths,
            backend: BackendConfig::default(),
        }
    }

    /// Parses TOML; relative paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, OrchestratorError> {
        let raw: ConfigFile = toml::from_str(text).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        if raw.tie_break != "incumbent" {
            return Err(OrchestratorError::Config(format!(
                "tie_break must be `incumbent`, got `{}`",
                raw.tie_break
            )));
        }
        let defaults = GenerationParams::default();
        let params = GenerationParams {
            temperature: raw.temperature.unwrap_or(defaults.temperature),
            top_p: raw.top_p.unwrap_or(defaults.top_p),
            max_tokens: raw.max_tokens.unwrap_or(defaults.max_tokens),
        };
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let config = Self {
            base_model_ref: raw.base_model_ref,
            selector: raw.selector,
            max_iterations: raw.max_iterations,
            expansion: ExpansionConfig {
                n_samples: raw.n_samples,
                params,
                concurrency_limit: raw.concurrency_limit,
                seed: raw.run_seed,
            },
            trainer_hook: raw.trainer_hook.parse().map_err(OrchestratorError::Config)?,
            run_seed: raw.run_seed,
            length_metric: raw.length_metric,
            update_catalyst: raw.update_catalyst,
            paths: RunPaths {
                workspace: resolve(raw.workspace),
                catalyst: resolve(raw.catalyst.path),
                dataset0: resolve(raw.dataset0.path),
            },
            backend: BackendConfig {
                url: raw.backend.url,
                token_env: raw.backend.token_env,
                fixture: raw.backend.fixture.map(resolve),
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|e| OrchestratorError::io(path, e))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |m: String| Err(OrchestratorError::Config(m));
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1".into());
        }
        if self.base_model_ref.trim().is_empty() {
            return bad("base_model_ref must be nonempty".into());
        }
        if self.expansion.n_samples == 0 {
            return bad("n_samples must be >= 1".into());
        }
        if self.expansion.concurrency_limit == 0 {
            return bad("concurrency_limit must be >= 1".into());
        }
        if self.expansion.seed != self.run_seed {
            return bad("expansion seed must equal run_seed".into());
        }
        self.expansion.params.validate().map_err(OrchestratorError::Config)
    }

    /// Behavior-relevant settings: everything that can change an artifact.
    /// Paths, the backend location, concurrency and the iteration bound are
    /// left out, so relocating or extending a run keeps its digests.
    pub fn snapshot(&self) -> Value {
        json!({
            "base_model_ref": self.base_model_ref,
            "selector": self.selector,
            "n_samples": self.expansion.n_samples,
            "temperature": self.expansion.params.temperature,
            "top_p": self.expansion.params.top_p,
            "max_tokens": self.expansion.params.max_tokens,
            "run_seed": self.run_seed,
            "trainer_hook": self.trainer_hook.to_string(),
            "tie_break": "incumbent",
            "length_metric": self.length_metric,
            "update_catalyst": self.update_catalyst,
            "meta_prompt": META_PROMPT_VERSION,
            "scoring_context": SCORING_CONTEXT_VERSION,
            "incumbent_rendering": "verbatim",
            "digest_algorithm": DIGEST_ALGORITHM,
        })
    }

    pub fn config_digest(&self) -> String {
        digest_json(&self.snapshot())
    }

    /// Opens the configured backend: the mock fixture when given, else the
    /// live endpoint from `backend.url` or the environment.
    pub fn open_backend(&self) -> Result<Arc<dyn Backend>, BackendError> {
        if let Some(fixture) = &self.backend.fixture {
            let mock = MockBackend::from_fixture_file(fixture)
                .map_err(|e| BackendError::InvalidRequest(format!("loading fixture: {e}")))?;
            return Ok(Arc::new(mock));
        }
        let live = match &self.backend.url {
            Some(url) => {
                let token = self.backend.token_env.as_deref().and_then(|v| std::env::var(v).ok());
                LiveBackend::new(url, token, DEFAULT_TIMEOUT)?
            }
            None => LiveBackend::from_env()?,
        };
        Ok(Arc::new(live))
    }
}

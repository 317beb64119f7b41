//! The train, expand, select, emit loop over versioned datasets.

mod config;
mod hook;
mod workspace;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::backend::{Backend, BackendHandle, RetryPolicy};
use crate::catalyst::{update_catalyst, CatalystUpdate};
use crate::digest::{digest_bytes, digest_json};
use crate::expansion::{expand_dataset, load_candidates, write_candidates, ExpansionError};
use crate::jsonl::{self, FileError};
use crate::selection::{
    apply_selection, load_decisions, select_all, write_decisions, SelectionError, SelectorKind, Strategy, Winner,
};
use crate::store::{
    load_catalyst, load_dataset, load_manifest, merge_training_corpus, verify_chain, write_catalyst, write_dataset,
    write_manifest, CatalystSet, ChainError, IterationDataset, IterationManifest, StoreError,
};

pub use config::{BackendConfig, RunConfig, RunPaths, DEFAULT_MAX_ITERATIONS};
pub use hook::{HookError, StagingManifest, TrainerHook};
pub use workspace::{Progress, RunLock, Stage, StageStatus, Workspace};

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("workspace {0} is locked by another run (remove run.lock if that run is gone)")]
    Locked(PathBuf),
    #[error("workspace {0} is already initialized; pass --resume to continue it")]
    AlreadyInitialized(PathBuf),
    #[error("workspace config digest {found} does not match this run's {expected}")]
    ConfigMismatch { expected: String, found: String },
    #[error("{0}")]
    Store(#[from] StoreError),
    #[error("{0}")]
    File(#[from] FileError),
    #[error("iteration {iteration}: {source}")]
    Hook {
        iteration: u32,
        #[source]
        source: HookError,
    },
    #[error("expansion: {0}")]
    Expansion(#[from] ExpansionError),
    #[error("selection: {0}")]
    Selection(#[from] SelectionError),
    #[error("manifest chain: {0}")]
    Chain(#[from] ChainError),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl OrchestratorError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        OrchestratorError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Everything a run needs besides its configuration.
pub struct Pipeline {
    config: RunConfig,
    workspace: Workspace,
    backend: Arc<dyn Backend>,
    retry: RetryPolicy,
    config_digest: String,
}

impl Pipeline {
    pub fn new(config: RunConfig, backend: Arc<dyn Backend>) -> Result<Self, OrchestratorError> {
        config.validate()?;
        Ok(Self {
            workspace: Workspace::new(&config.paths.workspace),
            config_digest: config.config_digest(),
            config,
            backend,
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    fn handle(&self, model: &str) -> BackendHandle {
        BackendHandle::new(self.backend.clone(), model)
            .with_retry(self.retry)
            .with_concurrency_limit(self.config.expansion.concurrency_limit)
    }

    fn progress(&self, iteration: u32, stage: Stage, status: StageStatus) -> Result<(), OrchestratorError> {
        self.workspace
            .write_progress(&Progress {
                iteration,
                stage,
                status,
            })
            .map_err(|e| OrchestratorError::io(&self.workspace.progress_path(), e))
    }

    /// Runs `max_iterations` cycles and returns manifests for t = 0..=max.
    ///
    /// A fresh workspace is initialized from the configured iteration-0
    /// dataset and catalyst. An initialized one is continued only when
    /// `resume` is set; stages whose artifacts exist are skipped.
    pub fn run(&self, resume: bool) -> Result<Vec<IterationManifest>, OrchestratorError> {
        let _lock = RunLock::acquire(&self.workspace).map_err(|e| match e.kind() {
            std::io::ErrorKind::AlreadyExists => OrchestratorError::Locked(self.workspace.root().to_path_buf()),
            _ => OrchestratorError::io(&self.workspace.lock_path(), e),
        })?;
        if self.workspace.is_initialized() {
            if !resume {
                return Err(OrchestratorError::AlreadyInitialized(self.workspace.root().to_path_buf()));
            }
            self.check_config()?;
        } else {
            self.initialize()?;
        }

        let mut manifests = vec![load_manifest(&self.workspace.manifest_path(0))?];
        for t in 0..self.config.max_iterations {
            let next_path = self.workspace.manifest_path(t + 1);
            let next = if next_path.exists() {
                load_manifest(&next_path)?
            } else {
                self.run_iteration(t)?
            };
            // Manifest t gains its trained model reference during the cycle.
            manifests[t as usize] = load_manifest(&self.workspace.manifest_path(t))?;
            manifests.push(next);
        }
        verify_chain(&manifests)?;
        self.progress(self.config.max_iterations, Stage::Done, StageStatus::Complete)?;
        Ok(manifests)
    }

    fn check_config(&self) -> Result<(), OrchestratorError> {
        let path = self.workspace.config_path();
        let bytes = std::fs::read(&path).map_err(|e| OrchestratorError::io(&path, e))?;
        let found = stored_config_digest(&bytes, &path)?;
        if found != self.config_digest {
            return Err(OrchestratorError::ConfigMismatch {
                expected: self.config_digest.clone(),
                found,
            });
        }
        Ok(())
    }

    /// Writes the iteration-0 artifacts, then `config.json` last so that an
    /// interrupted initialization is simply redone.
    fn initialize(&self) -> Result<(), OrchestratorError> {
        let dataset = load_dataset(&self.config.paths.dataset0)?;
        if dataset.iteration() != 0 {
            return Err(OrchestratorError::Config(format!(
                "{} holds iteration {}, expected 0",
                self.config.paths.dataset0.display(),
                dataset.iteration()
            )));
        }
        let catalyst = load_catalyst(&self.config.paths.catalyst)?;
        let catalyst_digest = write_catalyst(&catalyst, &self.workspace.catalyst_path())?;
        let dataset_digest = write_dataset(&dataset, &self.workspace.dataset_path(0))?;
        let manifest = IterationManifest {
            iteration: 0,
            base_model_ref: self.config.base_model_ref.clone(),
            trained_model_ref: String::new(),
            dataset_digest,
            catalyst_digest,
            selector: self.config.selector,
            config_digest: self.config_digest.clone(),
            parent_manifest_digest: String::new(),
        };
        let path = self.workspace.manifest_path(0);
        if !path.exists() {
            write_manifest(&manifest, &path)?;
        }
        let mut snapshot = serde_json::to_vec_pretty(&self.config.snapshot()).expect("snapshot serializes");
        snapshot.push(b'\n');
        let config_path = self.workspace.config_path();
        jsonl::write_once(&config_path, &snapshot).map_err(|e| OrchestratorError::io(&config_path, e))?;
        log::info!(
            "initialized {} with {} samples and {} catalyst examples",
            self.workspace.root().display(),
            dataset.len(),
            catalyst.len()
        );
        Ok(())
    }

    /// One full cycle on iteration `t`: train M_t from the base model on
    /// D^t plus the catalyst, expand under M_t, select, and emit D^{t+1}
    /// with its manifest.
    pub fn run_iteration(&self, t: u32) -> Result<IterationManifest, OrchestratorError> {
        let ws = &self.workspace;
        let mut manifest = load_manifest(&ws.manifest_path(t))?;
        let dataset = load_dataset(&ws.dataset_path(t))?;
        check_digest(dataset.digest(), &manifest.dataset_digest)?;
        let catalyst = load_catalyst(&ws.effective_catalyst_path(t))?;
        check_digest(catalyst.digest(), &manifest.catalyst_digest)?;

        self.progress(t, Stage::Train, StageStatus::Running)?;
        if manifest.trained_model_ref.is_empty() {
            let staging = self.stage_training(t, &dataset, &catalyst)?;
            let trained = match self.config.trainer_hook.invoke(&staging, &self.config.base_model_ref) {
                Ok(r) => r,
                Err(source) => {
                    self.progress(t, Stage::Train, StageStatus::Failed)?;
                    return Err(OrchestratorError::Hook { iteration: t, source });
                }
            };
            log::info!("iteration {t}: trained model {trained}");
            manifest.trained_model_ref = trained;
            write_manifest(&manifest, &ws.manifest_path(t))?;
        }
        let trained = manifest.trained_model_ref.clone();

        self.progress(t, Stage::Expand, StageStatus::Running)?;
        let candidates_path = ws.candidates_path(t);
        let candidates = if candidates_path.exists() {
            load_candidates(&candidates_path)?
        } else {
            let candidates = expand_dataset(&dataset, &self.handle(&trained), &self.config.expansion)?;
            write_candidates(&candidates, &candidates_path).map_err(|e| OrchestratorError::io(&candidates_path, e))?;
            candidates
        };
        let valid = candidates.iter().filter(|c| c.is_valid()).count();
        log::info!("iteration {t}: {valid}/{} candidates parsed", candidates.len());

        self.progress(t, Stage::Select, StageStatus::Running)?;
        let decisions_path = ws.decisions_path(t);
        let decisions = if decisions_path.exists() {
            load_decisions(&decisions_path)?
        } else {
            let strategy = match self.config.selector {
                SelectorKind::Length => Strategy::Length(self.config.length_metric),
                SelectorKind::OffPolicy => Strategy::Score {
                    kind: SelectorKind::OffPolicy,
                    scorer: self.handle(&self.config.base_model_ref),
                },
                SelectorKind::OnPolicy => Strategy::Score {
                    kind: SelectorKind::OnPolicy,
                    scorer: self.handle(&trained),
                },
            };
            let decisions = select_all(&dataset, &candidates, &strategy).inspect_err(|_| {
                let _ = self.progress(t, Stage::Select, StageStatus::Failed);
            })?;
            write_decisions(&decisions, &decisions_path).map_err(|e| OrchestratorError::io(&decisions_path, e))?;
            decisions
        };
        let won = decisions.iter().filter(|d| d.winner != Winner::Incumbent).count();
        log::info!("iteration {t}: {won}/{} samples took a candidate", decisions.len());

        self.progress(t, Stage::Emit, StageStatus::Running)?;
        let next = apply_selection(&dataset, &decisions, &candidates)?;
        let catalyst_digest = if self.config.update_catalyst == CatalystUpdate::Off {
            manifest.catalyst_digest.clone()
        } else {
            let updated = update_catalyst(&catalyst, &dataset, &next, self.config.update_catalyst)?;
            write_catalyst(&updated, &ws.iter_catalyst_path(t + 1))?
        };
        let dataset_digest = write_dataset(&next, &ws.dataset_path(t + 1))?;
        let next_manifest = IterationManifest {
            iteration: t + 1,
            base_model_ref: self.config.base_model_ref.clone(),
            trained_model_ref: String::new(),
            dataset_digest,
            catalyst_digest,
            selector: self.config.selector,
            config_digest: self.config_digest.clone(),
            parent_manifest_digest: manifest.digest(),
        };
        write_manifest(&next_manifest, &ws.manifest_path(t + 1))?;
        self.progress(t, Stage::Emit, StageStatus::Complete)?;
        Ok(next_manifest)
    }

    fn stage_training(
        &self,
        t: u32,
        dataset: &IterationDataset,
        catalyst: &CatalystSet,
    ) -> Result<PathBuf, OrchestratorError> {
        let corpus = merge_training_corpus(dataset, catalyst);
        let corpus_path = self.workspace.corpus_path(t);
        let bytes = corpus.to_jsonl_bytes();
        jsonl::write_once(&corpus_path, &bytes).map_err(|e| OrchestratorError::io(&corpus_path, e))?;
        let staging = StagingManifest {
            iteration: t,
            base_model_ref: self.config.base_model_ref.clone(),
            corpus_path: "corpus.jsonl".into(),
            corpus_digest: digest_bytes(&bytes),
            corpus_records: corpus.len(),
        };
        let path = self.workspace.staging_path(t);
        let mut json = serde_json::to_vec_pretty(&staging).expect("staging serializes");
        json.push(b'\n');
        jsonl::write_once(&path, &json).map_err(|e| OrchestratorError::io(&path, e))?;
        Ok(path)
    }
}

/// Convenience wrapper: build a pipeline and run it.
pub fn run(
    config: &RunConfig,
    backend: Arc<dyn Backend>,
    resume: bool,
) -> Result<Vec<IterationManifest>, OrchestratorError> {
    Pipeline::new(config.clone(), backend)?.run(resume)
}

fn check_digest(actual: &str, expected: &str) -> Result<(), OrchestratorError> {
    if actual == expected {
        Ok(())
    } else {
        Err(StoreError::DigestMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
        .into())
    }
}

fn stored_config_digest(bytes: &[u8], path: &Path) -> Result<String, OrchestratorError> {
    let value: serde_json::Value = serde_json::from_slice(bytes)
        .map_err(|e| OrchestratorError::Verify(format!("{}: {e}", path.display())))?;
    Ok(digest_json(&value))
}

/// Summary of a verified workspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub manifests: usize,
    pub last_dataset_digest: String,
}

/// Checks the manifest chain of a workspace and every file digest it
/// references.
pub fn verify_workspace(root: &Path) -> Result<VerifyReport, OrchestratorError> {
    let ws = Workspace::new(root);
    let config_path = ws.config_path();
    let config_bytes = std::fs::read(&config_path).map_err(|e| OrchestratorError::io(&config_path, e))?;
    let config_digest = stored_config_digest(&config_bytes, &config_path)?;

    let mut chain = Vec::new();
    while ws.manifest_path(chain.len() as u32).exists() {
        chain.push(load_manifest(&ws.manifest_path(chain.len() as u32))?);
    }
    verify_chain(&chain)?;
    for m in &chain {
        let fail = |what: &str, expected: &str, found: &str| {
            OrchestratorError::Verify(format!(
                "iteration {}: {what} digest {found} does not match manifest entry {expected}",
                m.iteration
            ))
        };
        let dataset = load_dataset(&ws.dataset_path(m.iteration))?;
        if dataset.iteration() != m.iteration && !dataset.is_empty() {
            return Err(OrchestratorError::Verify(format!(
                "iteration {}: dataset holds iteration {}",
                m.iteration,
                dataset.iteration()
            )));
        }
        if dataset.digest() != m.dataset_digest {
            return Err(fail("dataset", &m.dataset_digest, dataset.digest()));
        }
        let catalyst = load_catalyst(&ws.effective_catalyst_path(m.iteration))?;
        if catalyst.digest() != m.catalyst_digest {
            return Err(fail("catalyst", &m.catalyst_digest, catalyst.digest()));
        }
        if config_digest != m.config_digest {
            return Err(fail("config", &m.config_digest, &config_digest));
        }
    }
    Ok(VerifyReport {
        manifests: chain.len(),
        last_dataset_digest: chain.last().map(|m| m.dataset_digest.clone()).unwrap_or_default(),
    })
}

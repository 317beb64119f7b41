use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::jsonl;

/// File layout of one run directory.
///
/// ```text
/// config.json            behavior snapshot (its digest is config_digest)
/// catalyst.jsonl         catalyst set R
/// progress.json          last stage reached
/// run.lock               held while a run owns the workspace
/// iter-NNN/dataset.jsonl
/// iter-NNN/manifest.json
/// iter-NNN/catalyst.jsonl     only when the catalyst is updated
/// iter-NNN/train/corpus.jsonl
/// iter-NNN/train/staging.json
/// iter-NNN/candidates.jsonl
/// iter-NNN/decisions.jsonl
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn catalyst_path(&self) -> PathBuf {
        self.root.join("catalyst.jsonl")
    }

    pub fn progress_path(&self) -> PathBuf {
        self.root.join("progress.json")
    }

    pub fn lock_path(&self) -> PathBuf {
        self.root.join("run.lock")
    }

    pub fn iter_dir(&self, t: u32) -> PathBuf {
        self.root.join(format!("iter-{t:03}"))
    }

    pub fn dataset_path(&self, t: u32) -> PathBuf {
        self.iter_dir(t).join("dataset.jsonl")
    }

    pub fn manifest_path(&self, t: u32) -> PathBuf {
        self.iter_dir(t).join("manifest.json")
    }

    pub fn iter_catalyst_path(&self, t: u32) -> PathBuf {
        self.iter_dir(t).join("catalyst.jsonl")
    }

    pub fn corpus_path(&self, t: u32) -> PathBuf {
        self.iter_dir(t).join("train").join("corpus.jsonl")
    }

    pub fn staging_path(&self, t: u32) -> PathBuf {
        self.iter_dir(t).join("train").join("staging.json")
    }

    pub fn candidates_path(&self, t: u32) -> PathBuf {
        self.iter_dir(t).join("candidates.jsonl")
    }

    pub fn decisions_path(&self, t: u32) -> PathBuf {
        self.iter_dir(t).join("decisions.jsonl")
    }

    /// Catalyst in force for iteration `t`: the latest updated copy at or
    /// before `t`, else the initial set.
    pub fn effective_catalyst_path(&self, t: u32) -> PathBuf {
        (1..=t)
            .rev()
            .map(|i| self.iter_catalyst_path(i))
            .find(|p| p.exists())
            .unwrap_or_else(|| self.catalyst_path())
    }

    pub fn is_initialized(&self) -> bool {
        self.config_path().exists()
    }

    pub fn read_progress(&self) -> io::Result<Option<Progress>> {
        match std::fs::read(self.progress_path()) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn write_progress(&self, progress: &Progress) -> io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(progress).expect("progress serializes");
        bytes.push(b'\n');
        jsonl::write_atomic(&self.progress_path(), &bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Train,
    Expand,
    Select,
    Emit,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Running,
    Failed,
    Complete,
}

/// Resume marker: the stage an iteration last entered and how it ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Progress {
    pub iteration: u32,
    pub stage: Stage,
    pub status: StageStatus,
}

/// Exclusive ownership of a workspace, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(workspace: &Workspace) -> io::Result<Self> {
        std::fs::create_dir_all(workspace.root())?;
        let path = workspace.lock_path();
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path)?;
        writeln!(f, "{}", std::process::id())?;
        Ok(Self { path })
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

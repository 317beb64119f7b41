use std::fmt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// External fine-tuning command. It receives the staging manifest path as
/// its only argument and prints the trained model reference on its last
/// nonempty stdout line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrainerHook {
    /// Returns the base model unchanged.
    Noop,
    /// Shell command template; the staging path is appended as `"$1"`.
    Command(String),
}

impl fmt::Display for TrainerHook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainerHook::Noop => f.write_str("noop"),
            TrainerHook::Command(c) => f.write_str(c),
        }
    }
}

impl FromStr for TrainerHook {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "" => Err("trainer_hook must be a command or `noop`".into()),
            "noop" => Ok(TrainerHook::Noop),
            _ => Ok(TrainerHook::Command(s.to_string())),
        }
    }
}

/// What the hook reads: the merged corpus and the model to start from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagingManifest {
    pub iteration: u32,
    pub base_model_ref: String,
    /// Relative to the staging manifest's directory.
    pub corpus_path: String,
    pub corpus_digest: String,
    pub corpus_records: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum HookError {
    #[error("could not start trainer hook: {0}")]
    Spawn(std::io::Error),
    #[error("trainer hook exited with {status}: {stderr}")]
    Failed { status: String, stderr: String },
    #[error("trainer hook printed no model reference")]
    NoModelRef,
}

impl TrainerHook {
    /// Runs the hook and returns the trained model reference.
    pub fn invoke(&self, staging: &Path, base_model_ref: &str) -> Result<String, HookError> {
        let template = match self {
            TrainerHook::Noop => return Ok(base_model_ref.to_string()),
            TrainerHook::Command(t) => t,
        };
        log::info!("running trainer hook on {}", staging.display());
        let out = Command::new("sh")
            .arg("-c")
            .arg(format!("{template} \"$1\""))
            .arg("srlm-hook")
            .arg(staging)
            .stdin(Stdio::null())
            .output()
            .map_err(HookError::Spawn)?;
        let stderr = String::from_utf8_lossy(&out.stderr).trim().to_string();
        if !out.status.success() {
            return Err(HookError::Failed {
                status: out.status.to_string(),
                stderr,
            });
        }
        if !stderr.is_empty() {
            log::debug!("trainer hook stderr: {stderr}");
        }
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .map(str::trim)
            .rfind(|l| !l.is_empty())
            .map(str::to_string)
            .ok_or(HookError::NoModelRef)
    }
}

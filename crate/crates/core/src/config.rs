//! Extraction task configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::BackendConfig;
use crate::oracle::{HeaderLexicon, OracleConfig, OtherFindingsPolicy};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read task file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid task file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{key} refers to missing file {path}")]
    MissingFile { key: &'static str, path: PathBuf },
}

/// One extraction task. Unknown keys are rejected; everything except the
/// file paths has a default, and absent prompt files fall back to the
/// built-in template and example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub task: String,
    pub prompt_template: Option<PathBuf>,
    pub example: Option<PathBuf>,
    pub lexicon: HeaderLexicon,
    pub other_findings: OtherFindingsPolicy,
    pub backend: BackendConfig,
    pub output_dir: PathBuf,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            task: "recist".to_string(),
            prompt_template: None,
            example: None,
            lexicon: HeaderLexicon::default(),
            other_findings: OtherFindingsPolicy::default(),
            backend: BackendConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl TaskConfig {
    pub fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            lexicon: self.lexicon.clone(),
            other_findings: self.other_findings,
        }
    }
}

/// Reads and validates a task file. Relative paths are resolved against the
/// file's directory.
pub fn load_task(path: impl AsRef<Path>) -> Result<TaskConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg: TaskConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    let check = |key: &'static str, p: Option<&mut PathBuf>| -> Result<(), ConfigError> {
        if let Some(p) = p {
            resolve(p);
            if !p.exists() {
                return Err(ConfigError::MissingFile {
                    key,
                    path: p.clone(),
                });
            }
        }
        Ok(())
    };
    check("prompt_template", cfg.prompt_template.as_mut())?;
    check("example", cfg.example.as_mut())?;
    check("backend.replay_dir", cfg.backend.replay_dir.as_mut())?;
    resolve(&mut cfg.output_dir);
    Ok(cfg)
}

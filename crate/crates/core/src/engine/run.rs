//! On-disk layout of an extraction run.
//!
//! ```text
//! <run>/manifest.json          config snapshot, per-pair status and timings
//! <run>/pairs.jsonl            source report pairs, one per line
//! <run>/records.jsonl          full attempt history per pair
//! <run>/extractions/<id>.json  canonical extraction per pair
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BackendConfig, EngineError, ExtractionRecord};
use crate::corpus::{read_jsonl, write_jsonl};
use crate::model::{PairExtraction, ReportPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPairEntry {
    pub pair_id: String,
    pub status: PairStatus,
    pub attempts: usize,
    pub wall_time_secs: f64,
    pub extraction_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub task: String,
    pub backend: BackendConfig,
    pub pairs: Vec<RunPairEntry>,
}

/// A loaded run: pairs and extractions aligned by index.
#[derive(Debug, Clone)]
pub struct Run {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub pairs: Vec<ReportPair>,
    pub extractions: Vec<PairExtraction>,
}

impl Run {
    pub fn find(&self, pair_id: &str) -> Option<usize> {
        self.manifest
            .pairs
            .iter()
            .position(|p| p.pair_id == pair_id)
    }
}

/// File name for a pair id; slashes become double underscores.
pub fn extraction_file_name(pair_id: &str) -> String {
    format!("{}.json", pair_id.replace('/', "__"))
}

fn run_err(path: &Path, message: impl ToString) -> EngineError {
    EngineError::Run {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn write_run(
    dir: impl AsRef<Path>,
    task: &str,
    pairs: &[ReportPair],
    records: &[ExtractionRecord],
) -> Result<RunManifest, EngineError> {
    let dir = dir.as_ref();
    let ext_dir = dir.join("extractions");
    fs::create_dir_all(&ext_dir).map_err(|e| run_err(dir, e))?;
    let mut entries = Vec::with_capacity(pairs.len());
    for (pair, record) in pairs.iter().zip(records) {
        let file = extraction_file_name(&record.pair_id);
        let x = record.extraction_or_empty(pair);
        fs::write(ext_dir.join(&file), x.to_canonical_json() + "\n")
            .map_err(|e| run_err(&ext_dir, e))?;
        entries.push(RunPairEntry {
            pair_id: record.pair_id.clone(),
            status: if record.final_extraction.is_some() {
                PairStatus::Ok
            } else {
                PairStatus::Failed
            },
            attempts: record.attempts.len(),
            wall_time_secs: record.wall_time_secs,
            extraction_file: format!("extractions/{file}"),
        });
    }
    let manifest = RunManifest {
        run_id: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        task: task.to_string(),
        backend: records
            .first()
            .map(|r| r.backend.clone())
            .unwrap_or_default(),
        pairs: entries,
    };
    write_jsonl(dir.join("pairs.jsonl"), pairs).map_err(|e| run_err(dir, e))?;
    write_jsonl(dir.join("records.jsonl"), records).map_err(|e| run_err(dir, e))?;
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| run_err(dir, e))?;
    Ok(manifest)
}

pub fn load_run(dir: impl AsRef<Path>) -> Result<Run, EngineError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| run_err(&manifest_path, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| run_err(&manifest_path, e))?;
    let pairs: Vec<ReportPair> =
        read_jsonl(dir.join("pairs.jsonl")).map_err(|e| run_err(dir, e))?;
    if pairs.len() != manifest.pairs.len() {
        return Err(run_err(
            dir,
            "pairs.jsonl and manifest disagree on pair count",
        ));
    }
    let mut extractions = Vec::with_capacity(pairs.len());
    for (pair, entry) in pairs.iter().zip(&manifest.pairs) {
        if pair.pair_id() != entry.pair_id {
            return Err(run_err(
                dir,
                format!("pair order mismatch at {}", entry.pair_id),
            ));
        }
        let path = dir.join(&entry.extraction_file);
        let text = fs::read_to_string(&path).map_err(|e| run_err(&path, e))?;
        extractions.push(PairExtraction::from_json(&text).map_err(|e| run_err(&path, e))?);
    }
    Ok(Run {
        dir: dir.to_path_buf(),
        manifest,
        pairs,
        extractions,
    })
}

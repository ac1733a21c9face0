//! Append-only judgment log for one run.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ReviewError;
use crate::engine::{load_run, Run};
use crate::evaluator::{latest_wins, JudgmentEntry};
use crate::model::LesionCategory;

pub const LOG_FILE: &str = "judgments.jsonl";

/// One line of the judgment log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub recorded_at: DateTime<Utc>,
    pub judgment: JudgmentEntry,
}

struct Log {
    file: File,
    entries: Vec<JudgmentEntry>,
}

/// A run plus its judgment log. Appends are serialised through one lock
/// and reach the disk before [`JudgmentStore::record`] returns.
pub struct JudgmentStore {
    run: Run,
    log_path: PathBuf,
    log: Mutex<Log>,
}

impl JudgmentStore {
    pub fn open(run_dir: impl AsRef<Path>) -> Result<Self, ReviewError> {
        let run_dir = run_dir.as_ref();
        if !run_dir.join("manifest.json").is_file() {
            return Err(ReviewError::MissingManifest(run_dir.to_path_buf()));
        }
        let run = load_run(run_dir)?;
        let log_path = run_dir.join(LOG_FILE);
        let mut entries = Vec::new();
        if log_path.exists() {
            let reader =
                BufReader::new(File::open(&log_path).map_err(|e| ReviewError::io(&log_path, e))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| ReviewError::io(&log_path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<LogRecord>(&line) {
                    Ok(r) => entries.push(r.judgment),
                    // A torn final line from a crash mid-write is dropped; it was never acknowledged.
                    Err(e) => {
                        tracing::warn!(line = i + 1, error = %e, "skipping unreadable judgment log line")
                    }
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| ReviewError::io(&log_path, e))?;
        Ok(JudgmentStore {
            run,
            log_path,
            log: Mutex::new(Log { file, entries }),
        })
    }

    pub fn run(&self) -> &Run {
        &self.run
    }

    pub fn run_id(&self) -> &str {
        &self.run.manifest.run_id
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    /// Checks that a judgment refers to something in the run.
    pub fn check(&self, j: &JudgmentEntry) -> Result<(), ReviewError> {
        if j.reader_id().trim().is_empty() {
            return Err(ReviewError::InvalidJudgment(
                "reader_id must not be empty".into(),
            ));
        }
        let idx = self
            .run
            .find(j.pair_id())
            .ok_or_else(|| ReviewError::UnknownPair(j.pair_id().to_string()))?;
        let x = &self.run.extractions[idx];
        let has_label = |category: LesionCategory, label: &str| {
            x.reports.iter().any(|r| {
                r.lesions(category)
                    .iter()
                    .any(|l| l.label.as_deref() == Some(label))
            })
        };
        let side_ok = |i: u8| {
            if i <= 1 {
                Ok(())
            } else {
                Err(ReviewError::InvalidJudgment(format!(
                    "report_index must be 0 or 1, got {i}"
                )))
            }
        };
        match j {
            JudgmentEntry::Attribute(a) => {
                side_ok(a.report_index)?;
                if !has_label(a.category, &a.lesion_label) {
                    return Err(ReviewError::UnknownLesion(a.lesion_label.clone()));
                }
            }
            JudgmentEntry::Spurious(s) => {
                side_ok(s.report_index)?;
                if !has_label(s.category, &s.lesion_label) {
                    return Err(ReviewError::UnknownLesion(s.lesion_label.clone()));
                }
            }
            JudgmentEntry::Report(r) => side_ok(r.report_index)?,
            JudgmentEntry::PairReviewed(_) => {}
        }
        Ok(())
    }

    /// Validates, appends and syncs one judgment.
    pub fn record(&self, judgment: JudgmentEntry) -> Result<(), ReviewError> {
        self.check(&judgment)?;
        let line = serde_json::to_string(&LogRecord {
            recorded_at: Utc::now(),
            judgment: judgment.clone(),
        })
        .expect("serializable")
            + "\n";
        let mut log = self.log.lock().expect("log lock");
        log.file
            .write_all(line.as_bytes())
            .map_err(|e| ReviewError::io(&self.log_path, e))?;
        log.file
            .sync_data()
            .map_err(|e| ReviewError::io(&self.log_path, e))?;
        log.entries.push(judgment);
        Ok(())
    }

    /// Latest-wins view, optionally restricted to some readers.
    pub fn latest(&self, readers: Option<&[String]>) -> Vec<JudgmentEntry> {
        let entries = self.log.lock().expect("log lock").entries.clone();
        latest_wins(entries)
            .into_iter()
            .filter(|e| readers.is_none_or(|rs| rs.iter().any(|r| r == e.reader_id())))
            .collect()
    }

    pub fn raw_len(&self) -> usize {
        self.log.lock().expect("log lock").entries.len()
    }
}

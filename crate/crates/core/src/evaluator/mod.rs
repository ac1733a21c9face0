//! Scoring predicted extractions against references.
//!
//! Judgments are binary verdicts on the label, size and locator of one
//! lesion in one report. They come from human readers or from [`auto_judge`]
//! and are aggregated into attribute, lesion and document accuracies with
//! Wilson intervals.

mod judge;
mod stats;
mod summary;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use judge::{auto_judge, AutoJudgment, AUTO_READER};
pub use stats::{two_proportion_z, wilson_ci, Rate};
pub use summary::{
    accuracy_levels, inter_reader_agreement, latest_wins, unit_outcomes, CellSummary, EvalSummary,
    LesionKey, Level, ReaderComparison, ReportKey, UnitOutcomes,
};

use crate::corpus::{read_jsonl, write_jsonl};
use crate::model::LesionCategory;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid counts k={k} n={n}")]
    InvalidCounts { k: u64, n: u64 },
    #[error("confidence must lie strictly between 0 and 1, got {0}")]
    InvalidConfidence(f64),
    #[error("readers cover disjoint sets of pairs")]
    DisjointCoverage,
    #[error("duplicate judgment for {0}")]
    DuplicateJudgment(String),
    #[error("judgment file {path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Label,
    Size,
    SeIma,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Label, Attribute::Size, Attribute::SeIma];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Correct
        } else {
            Verdict::Incorrect
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportVerdict {
    Clean,
    HasErrors,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeJudgment {
    pub pair_id: String,
    pub reader_id: String,
    pub lesion_label: String,
    pub category: LesionCategory,
    pub report_index: u8,
    pub attribute: Attribute,
    pub verdict: Verdict,
}

/// Whole-report verdict for one category, used where attribute-level
/// review was skipped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReportLevelJudgment {
    pub pair_id: String,
    pub reader_id: String,
    pub category: LesionCategory,
    pub report_index: u8,
    pub verdict: ReportVerdict,
}

/// A predicted lesion with no reference counterpart.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpuriousLesion {
    pub pair_id: String,
    pub reader_id: String,
    pub category: LesionCategory,
    pub report_index: u8,
    pub lesion_label: String,
}

/// Marks a pair as fully reviewed by a reader, so both of its reports enter
/// the document-level denominators even when a category is empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairReviewed {
    pub pair_id: String,
    pub reader_id: String,
}

/// One line of a judgment file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JudgmentEntry {
    Attribute(AttributeJudgment),
    Report(ReportLevelJudgment),
    Spurious(SpuriousLesion),
    PairReviewed(PairReviewed),
}

impl JudgmentEntry {
    pub fn reader_id(&self) -> &str {
        match self {
            JudgmentEntry::Attribute(j) => &j.reader_id,
            JudgmentEntry::Report(j) => &j.reader_id,
            JudgmentEntry::Spurious(j) => &j.reader_id,
            JudgmentEntry::PairReviewed(j) => &j.reader_id,
        }
    }

    pub fn pair_id(&self) -> &str {
        match self {
            JudgmentEntry::Attribute(j) => &j.pair_id,
            JudgmentEntry::Report(j) => &j.pair_id,
            JudgmentEntry::Spurious(j) => &j.pair_id,
            JudgmentEntry::PairReviewed(j) => &j.pair_id,
        }
    }

    /// Identity under which a later entry replaces an earlier one.
    pub fn key(&self) -> String {
        match self {
            JudgmentEntry::Attribute(j) => format!(
                "attribute|{}|{}|{}|{}|{:?}|{:?}",
                j.reader_id, j.pair_id, j.lesion_label, j.report_index, j.category, j.attribute
            ),
            JudgmentEntry::Report(j) => {
                format!(
                    "report|{}|{}|{:?}|{}",
                    j.reader_id, j.pair_id, j.category, j.report_index
                )
            }
            JudgmentEntry::Spurious(j) => format!(
                "spurious|{}|{}|{:?}|{}|{}",
                j.reader_id, j.pair_id, j.category, j.report_index, j.lesion_label
            ),
            JudgmentEntry::PairReviewed(j) => {
                format!("pair_reviewed|{}|{}", j.reader_id, j.pair_id)
            }
        }
    }
}

pub fn read_judgments(path: impl AsRef<Path>) -> Result<Vec<JudgmentEntry>, EvalError> {
    let path = path.as_ref();
    read_jsonl(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_judgments(path: impl AsRef<Path>, entries: &[JudgmentEntry]) -> Result<(), EvalError> {
    let path = path.as_ref();
    write_jsonl(path, entries).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

//! Report corpora: loading, cohort selection, pairing and debug/test splits.

mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synth::{
    generate_synthetic, write_synthetic, CompositionProfile, SyntheticPair, TruthRecord,
};

use crate::model::{RadiologyReport, ReportPair};

pub const DEFAULT_KEYWORD: &str = "target";
pub const DEFAULT_MIN_HITS: usize = 2;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line_no}: malformed record: {message}")]
    MalformedLine { line_no: usize, message: String },
    #[error("duplicate study_uid {0}")]
    DuplicateStudyUid(String),
    #[error("line {line_no}: unparseable study_date {value:?}")]
    UnparseableDate { line_no: usize, value: String },
    #[error("requested {requested} debug pairs but only {available} pairs exist")]
    TooManyDebugPairs { requested: usize, available: usize },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// All reports plus a per-patient index sorted by study date.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    reports: Vec<RadiologyReport>,
    index: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn from_reports(reports: Vec<RadiologyReport>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for r in &reports {
            if !seen.insert(r.study_uid.as_str()) {
                return Err(CorpusError::DuplicateStudyUid(r.study_uid.clone()));
            }
        }
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in reports.iter().enumerate() {
            index.entry(r.patient_id.clone()).or_default().push(i);
        }
        for list in index.values_mut() {
            list.sort_by(|&a, &b| {
                (reports[a].study_date, &reports[a].study_uid)
                    .cmp(&(reports[b].study_date, &reports[b].study_uid))
            });
        }
        Ok(Corpus { reports, index })
    }

    pub fn reports(&self) -> &[RadiologyReport] {
        &self.reports
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn patient_count(&self) -> usize {
        self.index.len()
    }

    pub fn patients(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    /// Reports of one patient, oldest first.
    pub fn timeline(&self, patient_id: &str) -> Vec<&RadiologyReport> {
        self.index
            .get(patient_id)
            .map(|ids| ids.iter().map(|&i| &self.reports[i]).collect())
            .unwrap_or_default()
    }
}

#[derive(Deserialize)]
struct CorpusLine {
    patient_id: String,
    study_uid: String,
    study_date: String,
    body: String,
}

fn parse_study_date(value: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .ok()
        .or_else(|| {
            NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S")
                .ok()
                .map(|d| d.date())
        })
        .or_else(|| {
            DateTime::parse_from_rfc3339(value)
                .ok()
                .map(|d| d.date_naive())
        })
}

/// Reads a JSON-lines corpus. Blank lines are skipped; line numbers are 1-based.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut reports = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: CorpusLine =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
                line_no,
                message: e.to_string(),
            })?;
        if raw.body.trim().is_empty() {
            return Err(CorpusError::MalformedLine {
                line_no,
                message: "empty body".into(),
            });
        }
        let study_date =
            parse_study_date(&raw.study_date).ok_or_else(|| CorpusError::UnparseableDate {
                line_no,
                value: raw.study_date.clone(),
            })?;
        reports.push(RadiologyReport {
            patient_id: raw.patient_id,
            study_uid: raw.study_uid,
            study_date,
            body: raw.body,
        });
    }
    Corpus::from_reports(reports)
}

/// Writes any serializable records as JSON lines.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    f.write_all(&out).map_err(|e| CorpusError::io(path, e))
}

/// Reads JSON lines into `T`, skipping blank lines.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(
    path: impl AsRef<Path>,
) -> Result<Vec<T>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::MalformedLine {
                line_no: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn mentions(report: &RadiologyReport, keyword_lower: &str) -> bool {
    report.body.to_lowercase().contains(keyword_lower)
}

/// Patients with more than one report whose keyword (case-insensitive
/// substring) appears in at least `min_hits` distinct reports. A `min_hits`
/// of zero is treated as one.
pub fn select_cohort(corpus: &Corpus, keyword: &str, min_hits: usize) -> Vec<String> {
    let needle = keyword.to_lowercase();
    let min_hits = min_hits.max(1);
    corpus
        .index
        .iter()
        .filter(|(_, ids)| ids.len() > 1)
        .filter(|(_, ids)| {
            ids.iter()
                .filter(|&&i| mentions(&corpus.reports[i], &needle))
                .count()
                >= min_hits
        })
        .map(|(p, _)| p.clone())
        .collect()
}

/// Pairs of adjacent studies in each patient's timeline where both reports
/// mention the keyword. Unknown patients are ignored; same-day studies are
/// never paired.
pub fn form_pairs(corpus: &Corpus, patients: &[String], keyword: &str) -> Vec<ReportPair> {
    let needle = keyword.to_lowercase();
    let mut wanted: Vec<&String> = patients.iter().collect();
    wanted.sort();
    wanted.dedup();
    let mut out = Vec::new();
    for patient in wanted {
        let timeline = corpus.timeline(patient);
        for w in timeline.windows(2) {
            if mentions(w[0], &needle) && mentions(w[1], &needle) {
                if let Ok(pair) = ReportPair::new(w[0].clone(), w[1].clone()) {
                    out.push(pair);
                }
            }
        }
    }
    out
}

/// Seeded shuffle, then the first `n_debug` pairs form the debug set. Both
/// halves keep the input's relative order.
pub fn split_debug_test<T: Clone>(
    pairs: &[T],
    n_debug: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), CorpusError> {
    if n_debug > pairs.len() {
        return Err(CorpusError::TooManyDebugPairs {
            requested: n_debug,
            available: pairs.len(),
        });
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut debug_idx = order[..n_debug].to_vec();
    let mut test_idx = order[n_debug..].to_vec();
    debug_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((
        debug_idx.into_iter().map(|i| pairs[i].clone()).collect(),
        test_idx.into_iter().map(|i| pairs[i].clone()).collect(),
    ))
}

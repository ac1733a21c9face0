//! Aggregation of judgments into accuracy levels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{two_proportion_z, Attribute, EvalError, JudgmentEntry, Rate, ReportVerdict, Verdict};
use crate::model::LesionCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Document,
    Lesion,
    Attribute,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Document, Level::Lesion, Level::Attribute];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub category: LesionCategory,
    pub level: Level,
    #[serde(flatten)]
    pub rate: Rate,
}

/// Attribute-level comparison of two readers for one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderComparison {
    pub category: LesionCategory,
    pub reader_a: String,
    pub reader_b: String,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub readers: Vec<String>,
    /// Category × level cells with at least one observation.
    pub cells: Vec<CellSummary>,
    pub all_attribute_pair_rate: Option<Rate>,
    pub agreement_rate: Option<f64>,
    pub reader_comparisons: Vec<ReaderComparison>,
}

impl EvalSummary {
    pub fn cell(&self, category: LesionCategory, level: Level) -> Result<&Rate, EvalError> {
        self.cells
            .iter()
            .find(|c| c.category == category && c.level == level)
            .map(|c| &c.rate)
            .ok_or_else(|| {
                EvalError::EmptyInput(format!(
                    "no observations for {category:?} at {level:?} level"
                ))
            })
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    /// Category × level grid as aligned plain text.
    pub fn render_table(&self) -> String {
        let fmt = |r: &Rate| {
            format!(
                "{:5.1}% ({:5.1}-{:5.1}) {}/{}",
                100.0 * r.accuracy,
                100.0 * r.ci_low,
                100.0 * r.ci_high,
                r.k,
                r.n
            )
        };
        let mut rows: Vec<[String; 4]> = vec![[
            "category".into(),
            "document".into(),
            "lesion".into(),
            "attribute".into(),
        ]];
        for c in LesionCategory::ALL {
            let mut row = [
                c.short_name().to_string(),
                String::new(),
                String::new(),
                String::new(),
            ];
            for (i, level) in Level::ALL.iter().enumerate() {
                row[i + 1] = self.cell(c, *level).map(fmt).unwrap_or_else(|_| "-".into());
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..4)
            .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        if let Some(r) = &self.all_attribute_pair_rate {
            let _ = writeln!(out, "all attributes correct (pairs): {}", fmt(r));
        }
        if let Some(a) = self.agreement_rate {
            let _ = writeln!(out, "inter-reader agreement: {:.1}%", 100.0 * a);
        }
        for c in &self.reader_comparisons {
            let _ = writeln!(
                out,
                "{} {} vs {}: z = {:.3}, p = {:.3}",
                c.category.short_name(),
                c.reader_a,
                c.reader_b,
                c.z,
                c.p_value
            );
        }
        out
    }
}

/// Keeps the last entry per judgment identity, in log order, and returns
/// the survivors sorted.
pub fn latest_wins(entries: impl IntoIterator<Item = JudgmentEntry>) -> Vec<JudgmentEntry> {
    let mut map: BTreeMap<String, JudgmentEntry> = BTreeMap::new();
    for e in entries {
        map.insert(e.key(), e);
    }
    let mut out: Vec<JudgmentEntry> = map.into_values().collect();
    out.sort();
    out
}

/// (reader, pair, lesion label)
pub type LesionKey = (String, String, String);
/// (reader, pair, report index)
pub type ReportKey = (String, String, u8);

/// Per-unit verdicts for one category, before counting.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnitOutcomes {
    /// (correct, total) attribute judgments.
    pub attributes: (u64, u64),
    /// A lesion is correct iff every attribute judgment on it is correct.
    pub lesions: BTreeMap<LesionKey, bool>,
    /// A report is clean iff it has no incorrect judgment, no spurious
    /// lesion and no has-errors verdict for the category.
    pub reports: BTreeMap<ReportKey, bool>,
}

pub fn unit_outcomes(entries: &[JudgmentEntry], category: LesionCategory) -> UnitOutcomes {
    let mut o = UnitOutcomes::default();
    for e in entries {
        match e {
            JudgmentEntry::Attribute(j) if j.category == category => {
                let ok = j.verdict == Verdict::Correct;
                o.attributes.0 += ok as u64;
                o.attributes.1 += 1;
                *o.lesions
                    .entry((
                        j.reader_id.clone(),
                        j.pair_id.clone(),
                        j.lesion_label.clone(),
                    ))
                    .or_insert(true) &= ok;
                *o.reports
                    .entry((j.reader_id.clone(), j.pair_id.clone(), j.report_index))
                    .or_insert(true) &= ok;
            }
            JudgmentEntry::Report(j) if j.category == category => {
                *o.reports
                    .entry((j.reader_id.clone(), j.pair_id.clone(), j.report_index))
                    .or_insert(true) &= j.verdict == ReportVerdict::Clean;
            }
            JudgmentEntry::Spurious(j) if j.category == category => {
                o.reports.insert(
                    (j.reader_id.clone(), j.pair_id.clone(), j.report_index),
                    false,
                );
            }
            JudgmentEntry::PairReviewed(j) => {
                for side in 0..2 {
                    o.reports
                        .entry((j.reader_id.clone(), j.pair_id.clone(), side))
                        .or_insert(true);
                }
            }
            _ => {}
        }
    }
    o
}

fn count<'a>(units: impl Iterator<Item = &'a bool>) -> (u64, u64) {
    units.fold((0, 0), |(k, n), ok| (k + *ok as u64, n + 1))
}

/// Pools every reader's judgments (concatenation) into the summary grid.
pub fn accuracy_levels(entries: &[JudgmentEntry]) -> Result<EvalSummary, EvalError> {
    let mut sorted = entries.to_vec();
    sorted.sort();
    let mut seen = BTreeSet::new();
    for e in &sorted {
        if !seen.insert(e.key()) {
            return Err(EvalError::DuplicateJudgment(e.key()));
        }
    }
    if !sorted
        .iter()
        .any(|e| matches!(e, JudgmentEntry::Attribute(_) | JudgmentEntry::Report(_)))
    {
        return Err(EvalError::EmptyInput(
            "no attribute or report-level judgments".into(),
        ));
    }

    let mut cells = Vec::new();
    for category in LesionCategory::ALL {
        let o = unit_outcomes(&sorted, category);
        for (level, (k, n)) in [
            (Level::Document, count(o.reports.values())),
            (Level::Lesion, count(o.lesions.values())),
            (Level::Attribute, o.attributes),
        ] {
            if n > 0 {
                cells.push(CellSummary {
                    category,
                    level,
                    rate: Rate::new(k, n)?,
                });
            }
        }
    }

    let mut pairs: BTreeMap<(String, String), bool> = BTreeMap::new();
    for e in &sorted {
        let key = (e.reader_id().to_string(), e.pair_id().to_string());
        let ok = match e {
            JudgmentEntry::Attribute(j) => j.verdict == Verdict::Correct,
            JudgmentEntry::Report(j) => j.verdict == ReportVerdict::Clean,
            JudgmentEntry::Spurious(_) | JudgmentEntry::PairReviewed(_) => true,
        };
        *pairs.entry(key).or_insert(true) &= ok;
    }
    let clean = pairs.values().filter(|ok| **ok).count() as u64;
    let all_attribute_pair_rate = Some(Rate::new(clean, pairs.len() as u64)?);

    let readers: Vec<String> = sorted
        .iter()
        .map(|e| e.reader_id().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut agreement_rate = None;
    let mut reader_comparisons = Vec::new();
    if let [a, b] = readers.as_slice() {
        let of = |r: &str| {
            sorted
                .iter()
                .filter(|e| e.reader_id() == r)
                .cloned()
                .collect::<Vec<_>>()
        };
        let (ja, jb) = (of(a), of(b));
        agreement_rate = inter_reader_agreement(&ja, &jb).ok();
        for category in LesionCategory::ALL {
            let counts = |js: &[JudgmentEntry]| {
                js.iter().fold((0u64, 0u64), |(k, n), e| match e {
                    JudgmentEntry::Attribute(j) if j.category == category => {
                        (k + (j.verdict == Verdict::Correct) as u64, n + 1)
                    }
                    _ => (k, n),
                })
            };
            let ((k1, n1), (k2, n2)) = (counts(&ja), counts(&jb));
            if n1 > 0 && n2 > 0 {
                let (z, p_value) = two_proportion_z(k1, n1, k2, n2)?;
                reader_comparisons.push(ReaderComparison {
                    category,
                    reader_a: a.clone(),
                    reader_b: b.clone(),
                    z,
                    p_value,
                });
            }
        }
    }

    Ok(EvalSummary {
        readers,
        cells,
        all_attribute_pair_rate,
        agreement_rate,
        reader_comparisons,
    })
}

type Identification = (String, LesionCategory, String);

fn identifications(
    js: &[JudgmentEntry],
) -> BTreeMap<Identification, BTreeMap<(u8, Attribute), Verdict>> {
    let mut out: BTreeMap<Identification, BTreeMap<(u8, Attribute), Verdict>> = BTreeMap::new();
    for e in js {
        if let JudgmentEntry::Attribute(j) = e {
            out.entry((j.pair_id.clone(), j.category, j.lesion_label.clone()))
                .or_default()
                .insert((j.report_index, j.attribute), j.verdict);
        }
    }
    out
}

/// Fraction of lesions, over the union of both readers' identifications,
/// that both readers judged with identical per-attribute verdicts.
pub fn inter_reader_agreement(a: &[JudgmentEntry], b: &[JudgmentEntry]) -> Result<f64, EvalError> {
    let pairs = |js: &[JudgmentEntry]| {
        js.iter()
            .map(|e| e.pair_id().to_string())
            .collect::<BTreeSet<_>>()
    };
    let (pa, pb) = (pairs(a), pairs(b));
    if !pa.is_empty() && !pb.is_empty() && pa.is_disjoint(&pb) {
        return Err(EvalError::DisjointCoverage);
    }
    let (ia, ib) = (identifications(a), identifications(b));
    let union: BTreeSet<&Identification> = ia.keys().chain(ib.keys()).collect();
    if union.is_empty() {
        return Err(EvalError::EmptyInput(
            "no lesion identified by either reader".into(),
        ));
    }
    let agree = union
        .iter()
        .filter(|k| matches!((ia.get(**k), ib.get(**k)), (Some(x), Some(y)) if x == y))
        .count();
    Ok(agree as f64 / union.len() as f64)
}

//! Deterministic rule-based extractor for plain-text RECIST tables.
//!
//! It is the ground truth for the synthetic corpus, a non-model fallback
//! backend, and the executable description of the extraction task:
//!
//! * the rightmost numeric value before the last series-image locator is the
//!   current measurement;
//! * locator tokens (`^\d{1,3}-\d{1,4}$`) are never sizes;
//! * rows are categorised by the table section they sit in, and prose rows
//!   in a lesion section become lesions without a size;
//! * labels are `<PREFIX><ordinal>_<slug>` and stay fixed across timepoints;
//! * sizes are integer millimetres.

mod row;
mod sections;

use serde::{Deserialize, Serialize};

pub use row::{parse_row, RowFlag, RowParse};
pub use sections::{
    collect_footnotes, detect_sections, reassemble_lines, reassemble_rows, RawRow, SectionKind,
    TableSection,
};

use crate::linker::{harmonize_labels, normalize_description};
use crate::model::{
    make_label, Lesion, LesionCategory, PairExtraction, ReportExtraction, ReportPair,
    NOTE_NOT_MEASURABLE, NOTE_OTHER_FINDINGS, NOTE_RESOLVED, NOTE_SEPARATOR,
};

/// Section headers recognised in report bodies. Matching is on the whole
/// line, case-insensitive, ignoring surrounding whitespace and a trailing colon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeaderLexicon {
    pub target: Vec<String>,
    pub non_target: Vec<String>,
    pub new: Vec<String>,
    pub other_findings: Vec<String>,
    /// Whole-line placeholders for an empty section ("Geen.").
    pub empty_markers: Vec<String>,
    /// A line containing one of these tokens is a column-header line.
    pub column_header_markers: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for HeaderLexicon {
    fn default() -> Self {
        HeaderLexicon {
            target: strings(&[
                "target laesies",
                "target laesie",
                "targetlaesies",
                "target lesions",
                "doellaesies",
            ]),
            non_target: strings(&[
                "non-target laesies",
                "non-target laesie",
                "non-targetlaesies",
                "niet-target laesies",
                "non target laesies",
                "non-target lesions",
            ]),
            new: strings(&["nieuwe laesies", "nieuwe laesie", "new lesions"]),
            other_findings: strings(&["overige bevindingen", "overige", "other findings"]),
            empty_markers: strings(&["geen", "geen.", "n.v.t.", "nvt", "none", "-"]),
            column_header_markers: strings(&["se-ima", "se/ima", "se/im"]),
        }
    }
}

fn header_key(line: &str) -> String {
    line.trim().trim_end_matches(':').trim_end().to_lowercase()
}

impl HeaderLexicon {
    pub fn classify_header(&self, line: &str) -> Option<SectionKind> {
        let key = header_key(line);
        if key.is_empty() {
            return None;
        }
        let hit = |list: &[String]| list.iter().any(|h| h.to_lowercase() == key);
        if hit(&self.non_target) {
            Some(SectionKind::Lesions(LesionCategory::NonTarget))
        } else if hit(&self.target) {
            Some(SectionKind::Lesions(LesionCategory::Target))
        } else if hit(&self.new) {
            Some(SectionKind::Lesions(LesionCategory::New))
        } else if hit(&self.other_findings) {
            Some(SectionKind::OtherFindings)
        } else {
            None
        }
    }

    pub fn is_empty_marker(&self, line: &str) -> bool {
        let key = line.trim().to_lowercase();
        self.empty_markers.iter().any(|m| m.to_lowercase() == key)
    }

    pub fn is_column_header(&self, line: &str) -> bool {
        line.split_whitespace().any(|t| {
            let t = t
                .trim_matches(|c: char| c == ':' || c == '|')
                .to_lowercase();
            self.column_header_markers
                .iter()
                .any(|m| m.to_lowercase() == t)
        })
    }
}

/// What to do with rows under an "other findings" header.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtherFindingsPolicy {
    /// Keep them as non-target lesions with an `other_findings` note.
    #[default]
    NonTarget,
    Omit,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub lexicon: HeaderLexicon,
    pub other_findings: OtherFindingsPolicy,
}

/// Note text for a parsed row, or `None` when nothing is worth noting.
pub fn compose_note(row: &RowParse, other_findings: bool) -> Option<String> {
    let mut parts: Vec<&str> = Vec::new();
    if row.flags.contains(&RowFlag::NotMeasurable) {
        parts.push(NOTE_NOT_MEASURABLE);
    }
    if row.flags.contains(&RowFlag::Resolved) {
        parts.push(NOTE_RESOLVED);
    }
    if let Some(f) = row.footnote.as_deref() {
        parts.push(f);
    }
    if other_findings {
        parts.push(NOTE_OTHER_FINDINGS);
    }
    (!parts.is_empty()).then(|| parts.join(NOTE_SEPARATOR))
}

/// Extracts one report. Labels are numbered per category in row order.
pub fn extract_report(body: &str, study_uid: &str, cfg: &OracleConfig) -> ReportExtraction {
    let footnotes = collect_footnotes(body);
    let mut out = ReportExtraction::empty(study_uid);
    for section in detect_sections(body, &cfg.lexicon) {
        let (category, other) = match section.kind {
            SectionKind::Lesions(c) => (c, false),
            SectionKind::OtherFindings => match cfg.other_findings {
                OtherFindingsPolicy::NonTarget => (LesionCategory::NonTarget, true),
                OtherFindingsPolicy::Omit => continue,
            },
        };
        for raw in &section.rows {
            let parsed = parse_row(raw, &footnotes);
            let slug = normalize_description(&parsed.description);
            let list = out.lesions_mut(category);
            let ordinal = list.len() as u32 + 1;
            list.push(Lesion {
                label: Some(make_label(category, ordinal, &slug).expect("ordinal >= 1")),
                description: (!parsed.description.is_empty()).then(|| parsed.description.clone()),
                current_size_mm: parsed.current_size_mm,
                se_ima: parsed.se_ima.map(|s| s.to_string()),
                note: compose_note(&parsed, other),
            });
        }
    }
    out
}

/// Extracts both reports and carries baseline labels over to linked
/// follow-up lesions.
pub fn extract_pair(pair: &ReportPair, cfg: &OracleConfig) -> PairExtraction {
    let baseline = extract_report(&pair.baseline.body, &pair.baseline.study_uid, cfg);
    let mut followup = extract_report(&pair.followup.body, &pair.followup.study_uid, cfg);
    harmonize_labels(&baseline, &mut followup);
    PairExtraction::new(baseline, followup)
}

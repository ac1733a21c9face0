//! Domain types for lesions, reports and report pairs, plus the invariant
//! checks that every extraction must satisfy before it leaves the pipeline.
//!
//! The JSON layout produced by [`PairExtraction::to_canonical_json`] is the
//! wire format shared by the extraction engine, the truth files of the
//! synthetic corpus and the review service.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest lesion size accepted, in millimetres.
pub const MAX_SIZE_MM: i64 = 10_000;

/// Fixed note fragments. A lesion note is these (and footnote texts) joined by
/// [`NOTE_SEPARATOR`], in the order not-measurable, resolved, footnote, other-findings.
pub const NOTE_NOT_MEASURABLE: &str = "not measurable";
pub const NOTE_RESOLVED: &str = "resolved";
pub const NOTE_OTHER_FINDINGS: &str = "other_findings";
pub const NOTE_SEPARATOR: &str = "; ";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("lesion ordinal must be >= 1")]
    ZeroOrdinal,
    #[error("report pair must belong to one patient (got {baseline} and {followup})")]
    PatientMismatch { baseline: String, followup: String },
    #[error("baseline {baseline} is not strictly earlier than follow-up {followup}")]
    NotChronological {
        baseline: NaiveDate,
        followup: NaiveDate,
    },
}

// ---------------------------------------------------------------------------
// SE-IMA
// ---------------------------------------------------------------------------

/// Series/image locator such as `3-112`. Serializes as its text form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SeIma {
    pub series: u16,
    pub image: u16,
}

impl SeIma {
    /// Parses a token that is exactly 1-3 ASCII digits, a hyphen, then 1-4 ASCII digits.
    pub fn parse(token: &str) -> Option<SeIma> {
        let (series, image) = token.split_once('-')?;
        if !is_digits(series, 3) || !is_digits(image, 4) {
            return None;
        }
        Some(SeIma {
            series: series.parse().ok()?,
            image: image.parse().ok()?,
        })
    }
}

fn is_digits(s: &str, max_len: usize) -> bool {
    (1..=max_len).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit())
}

/// Free-function form used throughout the parser.
pub fn parse_se_ima(token: &str) -> Option<SeIma> {
    SeIma::parse(token)
}

impl fmt::Display for SeIma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.series, self.image)
    }
}

impl From<SeIma> for String {
    fn from(s: SeIma) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for SeIma {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for SeIma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SeIma::parse(s).ok_or_else(|| format!("not a series-image locator: {s:?}"))
    }
}

// ---------------------------------------------------------------------------
// Categories and labels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LesionCategory {
    Target,
    NonTarget,
    New,
}

impl LesionCategory {
    pub const ALL: [LesionCategory; 3] = [Self::Target, Self::NonTarget, Self::New];

    pub fn prefix(self) -> &'static str {
        match self {
            Self::Target => "TL_",
            Self::NonTarget => "NTL_",
            Self::New => "NL_",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Self::Target => "TL",
            Self::NonTarget => "NTL",
            Self::New => "NL",
        }
    }

    /// Name of the list holding this category inside a report object.
    pub fn field_name(self) -> &'static str {
        match self {
            Self::Target => "target_lesions",
            Self::NonTarget => "non_target_lesions",
            Self::New => "new_lesions",
        }
    }

    /// Category implied by a label prefix, if any.
    pub fn from_label(label: &str) -> Option<LesionCategory> {
        Self::ALL
            .into_iter()
            .find(|c| label.starts_with(c.prefix()))
    }
}

impl fmt::Display for LesionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Builds `<PREFIX><ordinal>_<slug>`, or `<PREFIX><ordinal>` when the slug is empty.
pub fn make_label(
    category: LesionCategory,
    ordinal: u32,
    slug: &str,
) -> Result<String, ModelError> {
    if ordinal == 0 {
        return Err(ModelError::ZeroOrdinal);
    }
    let mut label = format!("{}{}", category.prefix(), ordinal);
    if !slug.is_empty() {
        label.push('_');
        label.push_str(slug);
    }
    Ok(label)
}

/// Inverse of [`make_label`]. Returns `None` for labels outside that grammar.
pub fn split_label(label: &str) -> Option<(LesionCategory, u32, &str)> {
    let category = LesionCategory::from_label(label)?;
    let rest = &label[category.prefix().len()..];
    let (ordinal, slug) = match rest.split_once('_') {
        Some((ord, slug)) => (ord, slug),
        None => (rest, ""),
    };
    if ordinal.is_empty()
        || !ordinal.bytes().all(|b| b.is_ascii_digit())
        || ordinal.starts_with('0')
    {
        return None;
    }
    Some((category, ordinal.parse().ok()?, slug))
}

// ---------------------------------------------------------------------------
// Extraction output
// ---------------------------------------------------------------------------

/// One finding at one timepoint. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lesion {
    pub label: Option<String>,
    pub description: Option<String>,
    pub current_size_mm: Option<i64>,
    pub se_ima: Option<String>,
    pub note: Option<String>,
}

impl Lesion {
    pub fn is_empty(&self) -> bool {
        self.label.is_none()
            && self.description.is_none()
            && self.current_size_mm.is_none()
            && self.se_ima.is_none()
            && self.note.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportExtraction {
    pub study_uid: String,
    pub target_lesions: Vec<Lesion>,
    pub non_target_lesions: Vec<Lesion>,
    pub new_lesions: Vec<Lesion>,
}

impl ReportExtraction {
    pub fn empty(study_uid: impl Into<String>) -> Self {
        ReportExtraction {
            study_uid: study_uid.into(),
            target_lesions: Vec::new(),
            non_target_lesions: Vec::new(),
            new_lesions: Vec::new(),
        }
    }

    pub fn lesions(&self, category: LesionCategory) -> &[Lesion] {
        match category {
            LesionCategory::Target => &self.target_lesions,
            LesionCategory::NonTarget => &self.non_target_lesions,
            LesionCategory::New => &self.new_lesions,
        }
    }

    pub fn lesions_mut(&mut self, category: LesionCategory) -> &mut Vec<Lesion> {
        match category {
            LesionCategory::Target => &mut self.target_lesions,
            LesionCategory::NonTarget => &mut self.non_target_lesions,
            LesionCategory::New => &mut self.new_lesions,
        }
    }

    /// All lesions with their category, in TL, NTL, NL order.
    pub fn iter_lesions(&self) -> impl Iterator<Item = (LesionCategory, &Lesion)> {
        LesionCategory::ALL
            .into_iter()
            .flat_map(move |c| self.lesions(c).iter().map(move |l| (c, l)))
    }

    pub fn lesion_count(&self) -> usize {
        self.target_lesions.len() + self.non_target_lesions.len() + self.new_lesions.len()
    }
}

/// Baseline and follow-up extractions, in that order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairExtraction {
    pub reports: Vec<ReportExtraction>,
}

impl PairExtraction {
    pub fn new(baseline: ReportExtraction, followup: ReportExtraction) -> Self {
        PairExtraction {
            reports: vec![baseline, followup],
        }
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("extraction serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn lesion_count(&self) -> usize {
        self.reports
            .iter()
            .map(ReportExtraction::lesion_count)
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiologyReport {
    pub patient_id: String,
    pub study_uid: String,
    pub study_date: NaiveDate,
    pub body: String,
}

/// Two reports of one patient, baseline strictly before follow-up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportPair {
    pub patient_id: String,
    pub baseline: RadiologyReport,
    pub followup: RadiologyReport,
}

impl ReportPair {
    pub fn new(baseline: RadiologyReport, followup: RadiologyReport) -> Result<Self, ModelError> {
        if baseline.patient_id != followup.patient_id {
            return Err(ModelError::PatientMismatch {
                baseline: baseline.patient_id,
                followup: followup.patient_id,
            });
        }
        if baseline.study_date >= followup.study_date {
            return Err(ModelError::NotChronological {
                baseline: baseline.study_date,
                followup: followup.study_date,
            });
        }
        Ok(ReportPair {
            patient_id: baseline.patient_id.clone(),
            baseline,
            followup,
        })
    }

    /// `patient_id/baseline_uid/followup_uid`
    pub fn pair_id(&self) -> String {
        format!(
            "{}/{}/{}",
            self.patient_id, self.baseline.study_uid, self.followup.study_uid
        )
    }

    pub fn reports(&self) -> [&RadiologyReport; 2] {
        [&self.baseline, &self.followup]
    }
}

// ---------------------------------------------------------------------------
// Violations
// ---------------------------------------------------------------------------

/// A single invariant breach. Shared by validation, the schema gate and the
/// label-consistency check so that all of them report in one vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MalformedJson {
        message: String,
    },
    SchemaViolation {
        path: String,
        message: String,
    },
    UnknownField {
        path: String,
    },
    NonIntegerSize {
        path: String,
        value: String,
    },
    PatternViolation {
        path: String,
        value: String,
    },
    ReportCount {
        found: usize,
    },
    DuplicateStudyUid {
        study_uid: String,
    },
    EmptyLesion {
        path: String,
    },
    UnknownPrefix {
        path: String,
        label: String,
    },
    PrefixMismatch {
        path: String,
        label: String,
        expected: LesionCategory,
    },
    DuplicateLabel {
        path: String,
        label: String,
    },
    SizeRange {
        path: String,
        value: i64,
    },
    LabelDrift {
        category: LesionCategory,
        slug: String,
        baseline_label: String,
        followup_label: String,
    },
    SlugMismatch {
        category: LesionCategory,
        label: String,
        baseline_slug: String,
        followup_slug: String,
    },
    CrossCategoryLabel {
        label: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MalformedJson { message } => write!(f, "malformed JSON: {message}"),
            Self::SchemaViolation { path, message } => write!(f, "{path}: {message}"),
            Self::UnknownField { path } => write!(f, "{path}: unknown field"),
            Self::NonIntegerSize { path, value } => {
                write!(f, "{path}: size {value} is not an integer number of millimetres")
            }
            Self::PatternViolation { path, value } => {
                write!(f, "{path}: {value:?} does not match the series-image pattern")
            }
            Self::ReportCount { found } => write!(f, "expected exactly 2 reports, found {found}"),
            Self::DuplicateStudyUid { study_uid } => write!(f, "study_uid {study_uid} used twice"),
            Self::EmptyLesion { path } => write!(f, "{path}: lesion has no fields set"),
            Self::UnknownPrefix { path, label } => {
                write!(f, "{path}: label {label:?} must start with TL_, NTL_ or NL_")
            }
            Self::PrefixMismatch { path, label, expected } => {
                write!(f, "{path}: label {label:?} does not carry the {} prefix", expected.prefix())
            }
            Self::DuplicateLabel { path, label } => write!(f, "{path}: duplicate label {label:?}"),
            Self::SizeRange { path, value } => {
                write!(f, "{path}: size {value} outside 0..={MAX_SIZE_MM} mm")
            }
            Self::LabelDrift { slug, baseline_label, followup_label, .. } => write!(
                f,
                "lesion {slug:?} labeled {baseline_label:?} at baseline but {followup_label:?} at follow-up"
            ),
            Self::SlugMismatch { label, baseline_slug, followup_slug, .. } => write!(
                f,
                "label {label:?} names {baseline_slug:?} at baseline but {followup_slug:?} at follow-up"
            ),
            Self::CrossCategoryLabel { label } => {
                write!(f, "label {label:?} appears in more than one category")
            }
        }
    }
}

/// Returns every invariant breach in `x`; empty iff the extraction is valid.
pub fn validate_extraction(x: &PairExtraction) -> Vec<Violation> {
    let mut out = Vec::new();
    if x.reports.len() != 2 {
        out.push(Violation::ReportCount {
            found: x.reports.len(),
        });
    }
    let mut uids = HashSet::new();
    for (ri, report) in x.reports.iter().enumerate() {
        if !uids.insert(report.study_uid.as_str()) {
            out.push(Violation::DuplicateStudyUid {
                study_uid: report.study_uid.clone(),
            });
        }
        let mut labels = HashSet::new();
        for category in LesionCategory::ALL {
            for (li, lesion) in report.lesions(category).iter().enumerate() {
                let base = format!("reports[{ri}].{}[{li}]", category.field_name());
                validate_lesion(lesion, category, &base, &mut labels, &mut out);
            }
        }
    }
    out
}

fn validate_lesion<'a>(
    lesion: &'a Lesion,
    category: LesionCategory,
    base: &str,
    labels: &mut HashSet<&'a str>,
    out: &mut Vec<Violation>,
) {
    if let Some(label) = &lesion.label {
        let path = format!("{base}.label");
        match LesionCategory::from_label(label) {
            None => out.push(Violation::UnknownPrefix {
                path: path.clone(),
                label: label.clone(),
            }),
            Some(c) if c != category => out.push(Violation::PrefixMismatch {
                path: path.clone(),
                label: label.clone(),
                expected: category,
            }),
            Some(_) => {}
        }
        if !labels.insert(label.as_str()) {
            out.push(Violation::DuplicateLabel {
                path,
                label: label.clone(),
            });
        }
    }
    if let Some(size) = lesion.current_size_mm {
        if !(0..=MAX_SIZE_MM).contains(&size) {
            out.push(Violation::SizeRange {
                path: format!("{base}.current_size_mm"),
                value: size,
            });
        }
    }
    if let Some(se_ima) = &lesion.se_ima {
        if SeIma::parse(se_ima).is_none() {
            out.push(Violation::PatternViolation {
                path: format!("{base}.se_ima"),
                value: se_ima.clone(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lesion(label: &str, size: Option<i64>, se: Option<&str>) -> Lesion {
        Lesion {
            label: Some(label.to_string()),
            description: Some("lever".into()),
            current_size_mm: size,
            se_ima: se.map(str::to_string),
            note: None,
        }
    }

    fn valid_pair() -> PairExtraction {
        let mut a = ReportExtraction::empty("1.2.3");
        a.target_lesions
            .push(lesion("TL_1_lever", Some(19), Some("3-112")));
        a.non_target_lesions
            .push(lesion("NTL_1_milt", None, Some("2-45")));
        let mut b = ReportExtraction::empty("1.2.4");
        b.target_lesions
            .push(lesion("TL_1_lever", Some(17), Some("3-110")));
        b.new_lesions
            .push(lesion("NL_1_bijnier_links", Some(14), Some("6-201")));
        PairExtraction::new(a, b)
    }

    #[test]
    fn se_ima_examples() {
        assert_eq!(
            parse_se_ima("3-112"),
            Some(SeIma {
                series: 3,
                image: 112
            })
        );
        assert_eq!(parse_se_ima("1234-5"), None);
        assert_eq!(parse_se_ima("12-34-56"), None);
        assert_eq!(parse_se_ima("28"), None);
        assert_eq!(
            parse_se_ima("999-9999"),
            Some(SeIma {
                series: 999,
                image: 9999
            })
        );
        assert_eq!(parse_se_ima("3-"), None);
        assert_eq!(parse_se_ima("-3"), None);
        assert_eq!(parse_se_ima(" 3-1"), None);
        assert_eq!(parse_se_ima("٣-١"), None);
    }

    #[test]
    fn se_ima_renders_without_padding() {
        let s = parse_se_ima("03-0112").unwrap();
        assert_eq!(s.to_string(), "3-112");
        assert_eq!(parse_se_ima(&s.to_string()), Some(s));
    }

    #[test]
    fn labels() {
        assert_eq!(
            make_label(LesionCategory::Target, 1, "lever_segment_2").unwrap(),
            "TL_1_lever_segment_2"
        );
        assert_eq!(
            make_label(LesionCategory::New, 2, "bijnier_links").unwrap(),
            "NL_2_bijnier_links"
        );
        assert_eq!(
            make_label(LesionCategory::NonTarget, 1, "").unwrap(),
            "NTL_1"
        );
        assert_eq!(
            make_label(LesionCategory::Target, 0, "x"),
            Err(ModelError::ZeroOrdinal)
        );
    }

    #[test]
    fn split_label_inverts_make_label() {
        for (cat, ord, slug) in [
            (LesionCategory::NonTarget, 1, ""),
            (LesionCategory::Target, 12, "lever_segment_4a"),
            (LesionCategory::New, 3, "a"),
        ] {
            let label = make_label(cat, ord, slug).unwrap();
            assert_eq!(split_label(&label), Some((cat, ord, slug)));
        }
        assert_eq!(split_label("XL_1_a"), None);
        assert_eq!(split_label("TL_a"), None);
    }

    #[test]
    fn ntl_prefix_is_not_mistaken_for_tl() {
        assert_eq!(
            LesionCategory::from_label("NTL_1"),
            Some(LesionCategory::NonTarget)
        );
        assert_eq!(
            LesionCategory::from_label("TL_1"),
            Some(LesionCategory::Target)
        );
        assert_eq!(
            LesionCategory::from_label("NL_1"),
            Some(LesionCategory::New)
        );
    }

    #[test]
    fn valid_extraction_has_no_violations() {
        assert!(validate_extraction(&valid_pair()).is_empty());
    }

    #[test]
    fn prefix_mismatch() {
        let mut x = valid_pair();
        x.reports[0]
            .non_target_lesions
            .push(lesion("TL_1_x", None, None));
        let v = validate_extraction(&x);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::PrefixMismatch { .. }));
    }

    #[test]
    fn negative_size() {
        let mut x = valid_pair();
        x.reports[1].target_lesions[0].current_size_mm = Some(-3);
        assert_eq!(
            validate_extraction(&x),
            vec![Violation::SizeRange {
                path: "reports[1].target_lesions[0].current_size_mm".into(),
                value: -3
            }]
        );
    }

    #[test]
    fn each_mutant_is_caught() {
        type Mutant = Box<dyn Fn(&mut PairExtraction)>;
        let mutants: Vec<Mutant> = vec![
            Box::new(|x| x.reports.pop().map(|_| ()).unwrap()),
            Box::new(|x| x.reports[1].study_uid = x.reports[0].study_uid.clone()),
            Box::new(|x| x.reports[0].target_lesions[0].label = Some("XX_1".into())),
            Box::new(|x| x.reports[0].target_lesions[0].current_size_mm = Some(MAX_SIZE_MM + 1)),
            Box::new(|x| x.reports[0].target_lesions[0].se_ima = Some("SE3/IM112".into())),
            Box::new(|x| {
                let l = x.reports[1].target_lesions[0].clone();
                x.reports[1].target_lesions.push(l);
            }),
        ];
        for (i, mutate) in mutants.iter().enumerate() {
            let mut x = valid_pair();
            mutate(&mut x);
            assert_eq!(validate_extraction(&x).len(), 1, "mutant {i}");
        }
    }

    #[test]
    fn canonical_json_shape() {
        let json = valid_pair().to_canonical_json();
        assert!(json.starts_with(r#"{"reports":[{"study_uid":"1.2.3","target_lesions":[{"label":"TL_1_lever","description":"lever","current_size_mm":19,"se_ima":"3-112","note":null}]"#));
        assert!(json.contains(r#""new_lesions":[]"#));
        assert_eq!(PairExtraction::from_json(&json).unwrap(), valid_pair());
    }

    #[test]
    fn pair_requires_order_and_patient() {
        let r = |p: &str, uid: &str, d: &str| RadiologyReport {
            patient_id: p.into(),
            study_uid: uid.into(),
            study_date: d.parse().unwrap(),
            body: "x".into(),
        };
        let pair = ReportPair::new(r("p", "a", "2022-01-01"), r("p", "b", "2022-03-01")).unwrap();
        assert_eq!(pair.pair_id(), "p/a/b");
        assert!(matches!(
            ReportPair::new(r("p", "a", "2022-03-01"), r("p", "b", "2022-03-01")),
            Err(ModelError::NotChronological { .. })
        ));
        assert!(matches!(
            ReportPair::new(r("p", "a", "2022-01-01"), r("q", "b", "2022-03-01")),
            Err(ModelError::PatientMismatch { .. })
        ));
    }
}

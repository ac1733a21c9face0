//! Anatomical slugs and cross-timepoint lesion linking.
//!
//! Lesions are linked by exact slug equality within a category. Ties are
//! broken by list order. No fuzzy matching is attempted; differently worded
//! descriptions of the same lesion stay unlinked and surface as findings of
//! [`label_consistency`].

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::model::{
    make_label, parse_se_ima, split_label, Lesion, LesionCategory, PairExtraction,
    ReportExtraction, Violation, NOTE_RESOLVED, NOTE_SEPARATOR,
};

const UNIT_WORDS: [&str; 3] = ["mm", "cm", "nm"];

/// Lowercased, diacritic-free, underscore-joined anatomical slug.
///
/// Measurement tokens, bare integers, series-image tokens and punctuation are
/// dropped.
pub fn normalize_description(description: &str) -> String {
    let folded: String = description
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .collect::<String>()
        .to_lowercase();

    let mut words = Vec::new();
    for token in folded.split_whitespace() {
        if parse_se_ima(token).is_some() {
            continue;
        }
        let cleaned: String = token
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect();
        for word in cleaned.split_whitespace() {
            if !is_measurement_word(word) {
                words.push(word.to_string());
            }
        }
    }
    words.join("_")
}

fn is_measurement_word(word: &str) -> bool {
    if UNIT_WORDS.contains(&word) {
        return true;
    }
    let digits_end = word
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(word.len());
    if digits_end == 0 {
        return false;
    }
    let rest = &word[digits_end..];
    rest.is_empty() || UNIT_WORDS.contains(&rest)
}

/// Slug used for matching: from the description, else from the label.
pub fn lesion_slug(lesion: &Lesion) -> String {
    if let Some(d) = lesion.description.as_deref() {
        let slug = normalize_description(d);
        if !slug.is_empty() {
            return slug;
        }
    }
    lesion
        .label
        .as_deref()
        .map(|l| {
            split_label(l)
                .map(|(_, _, slug)| slug.to_string())
                .unwrap_or_else(|| normalize_description(l))
        })
        .unwrap_or_default()
}

pub fn is_resolved(lesion: &Lesion) -> bool {
    lesion.current_size_mm.is_none()
        && lesion
            .note
            .as_deref()
            .is_some_and(|n| n.split(NOTE_SEPARATOR).any(|part| part == NOTE_RESOLVED))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkStatus {
    Persisted,
    Resolved,
    NewInFollowup,
    BaselineOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedLesion {
    pub category: LesionCategory,
    pub label: String,
    pub baseline: Option<Lesion>,
    pub followup: Option<Lesion>,
    pub status: LinkStatus,
}

/// Index-level matching of one category: `(baseline_idx, followup_idx)` pairs,
/// first unmatched follow-up lesion wins for each baseline lesion.
pub fn match_by_slug(
    baseline: &[Lesion],
    followup: &[Lesion],
) -> Vec<(Option<usize>, Option<usize>)> {
    let follow_slugs: Vec<String> = followup.iter().map(lesion_slug).collect();
    let mut used = vec![false; followup.len()];
    let mut out = Vec::with_capacity(baseline.len() + followup.len());
    for (bi, b) in baseline.iter().enumerate() {
        let slug = lesion_slug(b);
        let hit = (0..followup.len()).find(|&fi| !used[fi] && follow_slugs[fi] == slug);
        if let Some(fi) = hit {
            used[fi] = true;
        }
        out.push((Some(bi), hit));
    }
    out.extend(
        (0..followup.len())
            .filter(|&fi| !used[fi])
            .map(|fi| (None, Some(fi))),
    );
    out
}

/// Links the lesions of two reports, category by category.
pub fn link_pair(baseline: &ReportExtraction, followup: &ReportExtraction) -> Vec<LinkedLesion> {
    let mut out = Vec::new();
    for category in LesionCategory::ALL {
        let b = baseline.lesions(category);
        let f = followup.lesions(category);
        for (bi, fi) in match_by_slug(b, f) {
            let base = bi.map(|i| b[i].clone());
            let follow = fi.map(|i| f[i].clone());
            let status = match (&base, &follow) {
                (Some(_), Some(fl)) if is_resolved(fl) => LinkStatus::Resolved,
                (Some(_), Some(_)) => LinkStatus::Persisted,
                (Some(_), None) => LinkStatus::BaselineOnly,
                (None, Some(_)) => LinkStatus::NewInFollowup,
                (None, None) => unreachable!("match_by_slug never yields an empty side pair"),
            };
            let label = base
                .as_ref()
                .or(follow.as_ref())
                .and_then(|l| l.label.clone())
                .unwrap_or_default();
            out.push(LinkedLesion {
                category,
                label,
                baseline: base,
                followup: follow,
                status,
            });
        }
    }
    out
}

/// Rewrites follow-up labels so linked lesions carry the baseline label.
/// Unlinked follow-up lesions are renumbered after the baseline ordinals of
/// their category, which keeps every label unique.
pub fn harmonize_labels(baseline: &ReportExtraction, followup: &mut ReportExtraction) {
    for category in LesionCategory::ALL {
        let b = baseline.lesions(category);
        let matches = match_by_slug(b, followup.lesions(category));
        let mut next_ordinal = b.len() as u32 + 1;
        let f = followup.lesions_mut(category);
        for (bi, fi) in matches {
            match (bi, fi) {
                (Some(bi), Some(fi)) => f[fi].label = b[bi].label.clone(),
                (None, Some(fi)) => {
                    let slug = lesion_slug(&f[fi]);
                    f[fi].label =
                        Some(make_label(category, next_ordinal, &slug).expect("ordinal >= 1"));
                    next_ordinal += 1;
                }
                _ => {}
            }
        }
    }
}

/// Flags labels that do not track the same lesion across both reports.
pub fn label_consistency(x: &PairExtraction) -> Vec<Violation> {
    let mut out = Vec::new();
    let [baseline, followup] = match x.reports.as_slice() {
        [a, b] => [a, b],
        _ => return out,
    };

    for category in LesionCategory::ALL {
        let b = baseline.lesions(category);
        let f = followup.lesions(category);
        for (bi, fi) in match_by_slug(b, f) {
            if let (Some(bi), Some(fi)) = (bi, fi) {
                let (bl, fl) = (&b[bi].label, &f[fi].label);
                if bl != fl {
                    out.push(Violation::LabelDrift {
                        category,
                        slug: lesion_slug(&b[bi]),
                        baseline_label: bl.clone().unwrap_or_default(),
                        followup_label: fl.clone().unwrap_or_default(),
                    });
                }
            }
        }

        let follow_by_label: HashMap<&str, &Lesion> = f
            .iter()
            .filter_map(|l| l.label.as_deref().map(|label| (label, l)))
            .collect();
        for bl in b {
            let Some(label) = bl.label.as_deref() else {
                continue;
            };
            if let Some(fl) = follow_by_label.get(label) {
                let (bs, fs) = (lesion_slug(bl), lesion_slug(fl));
                if bs != fs {
                    out.push(Violation::SlugMismatch {
                        category,
                        label: label.to_string(),
                        baseline_slug: bs,
                        followup_slug: fs,
                    });
                }
            }
        }
    }

    let mut seen: HashMap<&str, LesionCategory> = HashMap::new();
    let mut flagged = HashSet::new();
    for report in &x.reports {
        for (category, lesion) in report.iter_lesions() {
            let Some(label) = lesion.label.as_deref() else {
                continue;
            };
            match seen.get(label) {
                Some(&c) if c != category && flagged.insert(label) => {
                    out.push(Violation::CrossCategoryLabel {
                        label: label.to_string(),
                    });
                }
                Some(_) => {}
                None => {
                    seen.insert(label, category);
                }
            }
        }
    }
    out
}

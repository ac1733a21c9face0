//! Automatic judging of a predicted extraction against a reference.

use serde::{Deserialize, Serialize};

use super::{Attribute, AttributeJudgment, JudgmentEntry, PairReviewed, SpuriousLesion, Verdict};
use crate::linker::{lesion_slug, match_by_slug};
use crate::model::{Lesion, LesionCategory, PairExtraction};

pub const AUTO_READER: &str = "auto";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutoJudgment {
    pub attributes: Vec<AttributeJudgment>,
    pub spurious: Vec<SpuriousLesion>,
    pub reviewed: Vec<PairReviewed>,
}

impl AutoJudgment {
    pub fn into_entries(self) -> Vec<JudgmentEntry> {
        let mut out: Vec<JudgmentEntry> = self
            .reviewed
            .into_iter()
            .map(JudgmentEntry::PairReviewed)
            .collect();
        out.extend(self.attributes.into_iter().map(JudgmentEntry::Attribute));
        out.extend(self.spurious.into_iter().map(JudgmentEntry::Spurious));
        out
    }

    pub fn incorrect(&self) -> usize {
        self.attributes
            .iter()
            .filter(|j| j.verdict == Verdict::Incorrect)
            .count()
    }
}

/// One lesion followed over both reports.
#[derive(Debug, Clone)]
struct Track<'a> {
    sides: [Option<&'a Lesion>; 2],
}

impl<'a> Track<'a> {
    fn first(&self) -> &'a Lesion {
        self.sides
            .iter()
            .flatten()
            .next()
            .copied()
            .expect("track has a lesion")
    }

    fn slug(&self) -> String {
        lesion_slug(self.first())
    }

    fn label(&self) -> String {
        self.sides
            .iter()
            .flatten()
            .find_map(|l| l.label.clone())
            .unwrap_or_else(|| format!("<{}>", self.slug()))
    }
}

/// Reference lesions are followed by label, the reference being
/// authoritative about identity.
fn reference_tracks(x: &PairExtraction, category: LesionCategory) -> Vec<Track<'_>> {
    let mut tracks: Vec<(String, Track<'_>)> = Vec::new();
    for (ri, report) in x.reports.iter().take(2).enumerate() {
        for lesion in report.lesions(category) {
            let key = lesion
                .label
                .clone()
                .unwrap_or_else(|| format!("<{}>", lesion_slug(lesion)));
            match tracks
                .iter_mut()
                .find(|(k, t)| *k == key && t.sides[ri].is_none())
            {
                Some((_, t)) => t.sides[ri] = Some(lesion),
                None => {
                    let mut sides = [None, None];
                    sides[ri] = Some(lesion);
                    tracks.push((key, Track { sides }));
                }
            }
        }
    }
    tracks.into_iter().map(|(_, t)| t).collect()
}

/// Predicted lesions are followed by anatomical slug, so inconsistent
/// labels across reports show up as label errors.
fn predicted_tracks(x: &PairExtraction, category: LesionCategory) -> Vec<Track<'_>> {
    let empty: &[Lesion] = &[];
    let base = x.reports.first().map_or(empty, |r| r.lesions(category));
    let follow = x.reports.get(1).map_or(empty, |r| r.lesions(category));
    match_by_slug(base, follow)
        .into_iter()
        .map(|(b, f)| Track {
            sides: [b.map(|i| &base[i]), f.map(|i| &follow[i])],
        })
        .collect()
}

fn label_ok(pred: &Track<'_>, side: usize, category: LesionCategory) -> bool {
    let Some(label) = pred.sides[side].and_then(|l| l.label.as_deref()) else {
        return false;
    };
    if LesionCategory::from_label(label) != Some(category) {
        return false;
    }
    match (
        pred.sides[0].and_then(|l| l.label.as_deref()),
        pred.sides[1].and_then(|l| l.label.as_deref()),
    ) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    }
}

/// Judges every reference lesion on all three attributes in both reports.
///
/// A reference lesion without any predicted counterpart gets six incorrect
/// verdicts. When matched, a report where the reference lesion is absent
/// is correct only if the prediction is absent there too. Unmatched
/// predicted lesions are reported as spurious, once per report they occur in.
pub fn auto_judge(
    predicted: &PairExtraction,
    reference: &PairExtraction,
    pair_id: &str,
) -> AutoJudgment {
    let mut out = AutoJudgment {
        reviewed: vec![PairReviewed {
            pair_id: pair_id.to_string(),
            reader_id: AUTO_READER.to_string(),
        }],
        ..AutoJudgment::default()
    };
    for category in LesionCategory::ALL {
        let refs = reference_tracks(reference, category);
        let preds = predicted_tracks(predicted, category);
        let mut used = vec![false; preds.len()];

        for r in &refs {
            let slug = r.slug();
            let matched = (0..preds.len()).find(|&i| !used[i] && preds[i].slug() == slug);
            if let Some(i) = matched {
                used[i] = true;
            }
            let label = r.label();
            for side in 0..2u8 {
                let s = side as usize;
                for attribute in Attribute::ALL {
                    let ok = match matched.map(|i| &preds[i]) {
                        None => false,
                        Some(p) => match (r.sides[s], p.sides[s]) {
                            (None, None) => true,
                            (None, Some(_)) | (Some(_), None) => false,
                            (Some(rl), Some(pl)) => match attribute {
                                Attribute::Label => label_ok(p, s, category),
                                Attribute::Size => rl.current_size_mm == pl.current_size_mm,
                                Attribute::SeIma => rl.se_ima == pl.se_ima,
                            },
                        },
                    };
                    out.attributes.push(AttributeJudgment {
                        pair_id: pair_id.to_string(),
                        reader_id: AUTO_READER.to_string(),
                        lesion_label: label.clone(),
                        category,
                        report_index: side,
                        attribute,
                        verdict: Verdict::from_bool(ok),
                    });
                }
            }
        }

        for (p, _) in preds.iter().zip(&used).filter(|(_, u)| !**u) {
            for side in 0..2u8 {
                if p.sides[side as usize].is_some() {
                    out.spurious.push(SpuriousLesion {
                        pair_id: pair_id.to_string(),
                        reader_id: AUTO_READER.to_string(),
                        category,
                        report_index: side,
                        lesion_label: p.label(),
                    });
                }
            }
        }
    }
    out
}

//! Synthetic report pairs with exact ground truth.
//!
//! Each pair is drawn from three independent random streams: lesion content
//! (counts, anatomy, sizes, locators, dates), edge-case events (`nm`, dash
//! resolution, footnotes, prose findings, other findings) and layout (row
//! wrapping, column headers). Changing only the layout rates therefore
//! leaves the truth untouched, and changing the event rates leaves the
//! underlying lesions untouched.
//!
//! The truth is assembled from the generator's own lesion model, not by
//! running the rule-based extractor over the rendered text.

use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{write_jsonl, CorpusError};
use crate::linker::normalize_description;
use crate::model::{
    make_label, Lesion, LesionCategory, PairExtraction, RadiologyReport, ReportExtraction,
    ReportPair, SeIma, NOTE_NOT_MEASURABLE, NOTE_OTHER_FINDINGS, NOTE_RESOLVED, NOTE_SEPARATOR,
};

/// Mean lesion counts per pair and edge-case rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositionProfile {
    pub mean_target: f64,
    pub mean_non_target: f64,
    pub mean_new: f64,
    /// Probability that a table row is wrapped over two physical lines.
    pub wrapped_row_rate: f64,
    /// Per lesion and timepoint: measurement reported as `nm`.
    pub not_measurable_rate: f64,
    /// Per target/non-target lesion: follow-up measurement replaced by a dash.
    pub resolved_rate: f64,
    /// Per lesion and timepoint: asterisk footnote on the description.
    pub footnote_rate: f64,
    /// Per non-target/new section: last finding written as prose without measurements.
    pub prose_rate: f64,
    /// Per non-target lesion: listed under "other findings" instead.
    pub other_findings_rate: f64,
    /// Per report: column header line under the target header.
    pub column_header_rate: f64,
    /// Per non-target lesion: tracked without any size column.
    pub unmeasured_non_target_rate: f64,
}

impl Default for CompositionProfile {
    fn default() -> Self {
        CompositionProfile {
            mean_target: 2.6,
            mean_non_target: 5.0,
            mean_new: 0.91,
            wrapped_row_rate: 0.1,
            not_measurable_rate: 0.05,
            resolved_rate: 0.05,
            footnote_rate: 0.05,
            prose_rate: 0.1,
            other_findings_rate: 0.1,
            column_header_rate: 0.5,
            unmeasured_non_target_rate: 0.4,
        }
    }
}

impl CompositionProfile {
    /// Every row wrapped and all edge cases frequent.
    pub fn stress() -> Self {
        CompositionProfile {
            wrapped_row_rate: 1.0,
            not_measurable_rate: 0.2,
            resolved_rate: 0.2,
            footnote_rate: 0.2,
            prose_rate: 0.3,
            other_findings_rate: 0.2,
            ..Self::default()
        }
    }

    /// `default` or `stress`.
    pub fn named(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default()),
            "stress" => Some(Self::stress()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticPair {
    pub pair: ReportPair,
    pub truth: PairExtraction,
}

/// One line of a truth file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub pair_id: String,
    pub extraction: PairExtraction,
}

const ORGANS: [&str; 25] = [
    "Lever segment 4a",
    "Lever segment 4b",
    "Lever segment VII",
    "Lever segment VIII",
    "Long rechterbovenkwab",
    "Long rechteronderkwab",
    "Long linkerbovenkwab",
    "Long linkeronderkwab",
    "Lymfeklier mediastinaal",
    "Lymfeklier para-aortaal",
    "Lymfeklier hilair links",
    "Lymfeklier hilair rechts",
    "Subcarinale klier",
    "Bijnier links",
    "Bijnier rechts",
    "Milt",
    "Pancreaskop",
    "Peritoneum",
    "Pleura rechts",
    "Nier links",
    "Omentum",
    "Mesenteriale klier",
    "Wervel Th8",
    "Coëcum wand",
    "Retroperitoneale klier",
];

const QUALIFIERS: [&str; 7] = [
    "", "craniaal", "caudaal", "ventraal", "dorsaal", "mediaal", "lateraal",
];

const FOOTNOTE_TEXTS: [&str; 3] = [
    "moeilijk meetbaar",
    "onscherp begrensd, schatting",
    "meting bemoeilijkt door atelectase",
];

const INDICATIONS: [&str; 4] = [
    "Follow-up gemetastaseerd coloncarcinoom.",
    "Evaluatie behandeling longcarcinoom.",
    "Restadiering mammacarcinoom onder systemische therapie.",
    "Controle melanoom stadium IV.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Size(i64),
    NotMeasurable,
    Resolved,
    /// No measurement columns at all.
    Unmeasured,
    /// Prose-only row.
    Prose,
}

#[derive(Debug, Clone)]
struct Observation {
    slot: Slot,
    se_ima: Option<SeIma>,
    footnote: bool,
}

#[derive(Debug, Clone)]
struct Finding {
    category: LesionCategory,
    description: String,
    other_findings: bool,
    /// Measurement tokens from studies before the baseline.
    history: Vec<Slot>,
    baseline: Option<Observation>,
    followup: Observation,
}

fn stream(seed: u64, pair_index: usize, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair_index as u64 * 3 + lane);
    rng
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive mean");
    let v: f64 = d.sample(rng);
    v as usize
}

fn random_se_ima(rng: &mut ChaCha8Rng) -> SeIma {
    SeIma {
        series: rng.random_range(2..=12),
        image: rng.random_range(10..=450),
    }
}

fn description_pool(rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut pool: Vec<String> = ORGANS
        .iter()
        .flat_map(|o| {
            QUALIFIERS.iter().map(move |q| {
                if q.is_empty() {
                    o.to_string()
                } else {
                    format!("{o} {q}")
                }
            })
        })
        .collect();
    pool.shuffle(rng);
    pool
}

/// Draws `n_pairs` pairs. The same `(n_pairs, seed, profile)` always yields
/// byte-identical output.
pub fn generate_synthetic(
    n_pairs: usize,
    seed: u64,
    profile: &CompositionProfile,
) -> Vec<SyntheticPair> {
    (0..n_pairs)
        .map(|i| generate_one(i, seed, profile))
        .collect()
}

fn generate_one(index: usize, seed: u64, profile: &CompositionProfile) -> SyntheticPair {
    let mut content = stream(seed, index, 0);
    let mut events = stream(seed, index, 1);
    let mut layout = stream(seed, index, 2);

    let patient_id = format!("SYN{seed}-{:04}", index + 1);
    let base_date = NaiveDate::from_ymd_opt(2021, 3, 1).expect("valid date")
        + Duration::days(content.random_range(0..1300));
    let follow_date = base_date + Duration::days(content.random_range(42..=180));
    let uid = |n: u8| format!("1.2.826.0.1.3680043.10.{seed}.{}.{n}", index + 1);

    let n_target = if profile.mean_target >= 1.0 {
        1 + poisson(&mut content, profile.mean_target - 1.0)
    } else {
        poisson(&mut content, profile.mean_target)
    };
    let n_non_target = poisson(&mut content, profile.mean_non_target);
    let n_new = poisson(&mut content, profile.mean_new);
    let pool = description_pool(&mut content);
    let total = (n_target + n_non_target + n_new).min(pool.len());
    let mut descriptions = pool.into_iter().take(total);

    let mut findings: Vec<Finding> = Vec::new();
    let plan = [
        (LesionCategory::Target, n_target),
        (LesionCategory::NonTarget, n_non_target),
        (LesionCategory::New, n_new),
    ];
    for (category, count) in plan {
        for _ in 0..count {
            let Some(description) = descriptions.next() else {
                break;
            };
            findings.push(draw_finding(category, description, &mut content));
        }
    }

    apply_events(&mut findings, profile, &mut events);
    order_for_rendering(&mut findings);

    let baseline_footnotes = footnote_texts(&findings, true);
    let follow_footnotes = footnote_texts(&findings, false);

    let baseline = RadiologyReport {
        patient_id: patient_id.clone(),
        study_uid: uid(1),
        study_date: base_date,
        body: render_report(
            &findings,
            true,
            None,
            &baseline_footnotes,
            profile,
            &mut layout,
        ),
    };
    let followup = RadiologyReport {
        patient_id,
        study_uid: uid(2),
        study_date: follow_date,
        body: render_report(
            &findings,
            false,
            Some(base_date),
            &follow_footnotes,
            profile,
            &mut layout,
        ),
    };

    let truth = build_truth(
        &findings,
        &baseline.study_uid,
        &followup.study_uid,
        &baseline_footnotes,
        &follow_footnotes,
    );
    let pair = ReportPair::new(baseline, followup).expect("follow-up strictly after baseline");
    SyntheticPair { pair, truth }
}

fn draw_finding(category: LesionCategory, description: String, rng: &mut ChaCha8Rng) -> Finding {
    let history_len = rng.random_range(0..=2usize);
    let baseline_size: i64 = rng.random_range(10..=80);
    let history: Vec<Slot> = (0..history_len)
        .map(|_| Slot::Size((baseline_size as f64 * rng.random_range(0.8..1.4)).round() as i64))
        .collect();
    let follow_size = ((baseline_size as f64 * rng.random_range(0.5..1.3)).round() as i64).max(1);
    let base_se = random_se_ima(rng);
    let follow_se = random_se_ima(rng);
    let new_size: i64 = rng.random_range(5..=40);

    match category {
        LesionCategory::New => Finding {
            category,
            description,
            other_findings: false,
            history: Vec::new(),
            baseline: None,
            followup: Observation {
                slot: Slot::Size(new_size),
                se_ima: Some(follow_se),
                footnote: false,
            },
        },
        _ => Finding {
            category,
            description,
            other_findings: false,
            history,
            baseline: Some(Observation {
                slot: Slot::Size(baseline_size),
                se_ima: Some(base_se),
                footnote: false,
            }),
            followup: Observation {
                slot: Slot::Size(follow_size),
                se_ima: Some(follow_se),
                footnote: false,
            },
        },
    }
}

fn apply_events(findings: &mut [Finding], p: &CompositionProfile, rng: &mut ChaCha8Rng) {
    for f in findings.iter_mut() {
        // Fixed number of draws per finding keeps the stream aligned across profiles.
        let draws: [f64; 7] = std::array::from_fn(|_| rng.random::<f64>());
        let [unmeasured, other, base_nm, follow_nm, resolved, base_fn, follow_fn] = draws;

        if f.category == LesionCategory::NonTarget {
            if unmeasured < p.unmeasured_non_target_rate {
                f.history.clear();
                if let Some(b) = f.baseline.as_mut() {
                    b.slot = Slot::Unmeasured;
                }
                f.followup.slot = Slot::Unmeasured;
            }
            f.other_findings = other < p.other_findings_rate;
        }
        if let Some(b) = f.baseline.as_mut() {
            if b.slot != Slot::Unmeasured && base_nm < p.not_measurable_rate {
                b.slot = Slot::NotMeasurable;
            }
            b.footnote = base_fn < p.footnote_rate;
        }
        if f.category != LesionCategory::New && resolved < p.resolved_rate {
            f.followup = Observation {
                slot: Slot::Resolved,
                se_ima: None,
                footnote: false,
            };
        } else {
            if f.followup.slot != Slot::Unmeasured && follow_nm < p.not_measurable_rate {
                f.followup.slot = Slot::NotMeasurable;
            }
            f.followup.footnote = follow_fn < p.footnote_rate;
        }
    }

    // A prose finding must be the last row of its section, so at most one
    // per section; it replaces the final non-target (non other-findings) or
    // new lesion.
    for category in [LesionCategory::NonTarget, LesionCategory::New] {
        let roll: f64 = rng.random();
        if roll >= p.prose_rate {
            continue;
        }
        if let Some(f) = findings
            .iter_mut()
            .rev()
            .find(|f| f.category == category && !f.other_findings)
        {
            let stem = f.description.to_lowercase();
            f.description = match category {
                LesionCategory::New => format!("nieuwe afwijking {stem}, niet meetbaar"),
                _ => format!("diffuse afwijking {stem}, niet meetbaar"),
            };
            f.history.clear();
            let prose = Observation {
                slot: Slot::Prose,
                se_ima: None,
                footnote: false,
            };
            if f.baseline.is_some() {
                f.baseline = Some(prose.clone());
            }
            f.followup = prose;
        }
    }
}

/// Row order in the rendered report, which is also the truth list order:
/// targets, non-targets (prose last), new lesions (prose last), then the
/// other-findings rows appended to the non-target list.
fn order_for_rendering(findings: &mut [Finding]) {
    findings.sort_by_key(|f| {
        let prose = f.followup.slot == Slot::Prose;
        match (f.category, f.other_findings) {
            (LesionCategory::Target, _) => (0, prose),
            (LesionCategory::NonTarget, false) => (1, prose),
            (LesionCategory::New, _) => (2, prose),
            (LesionCategory::NonTarget, true) => (3, prose),
        }
    });
}

/// Footnote marker per footnoted finding (by index) for one timepoint.
fn footnote_texts(findings: &[Finding], baseline: bool) -> Vec<Option<(String, String)>> {
    let mut n = 0;
    findings
        .iter()
        .map(|f| {
            let obs = if baseline {
                f.baseline.as_ref()
            } else {
                Some(&f.followup)
            };
            match obs {
                Some(o) if o.footnote => {
                    n += 1;
                    Some((
                        "*".repeat(n),
                        FOOTNOTE_TEXTS[(n - 1) % FOOTNOTE_TEXTS.len()].to_string(),
                    ))
                }
                _ => None,
            }
        })
        .collect()
}

fn slot_token(slot: Slot) -> Option<String> {
    match slot {
        Slot::Size(v) => Some(v.to_string()),
        Slot::NotMeasurable => Some("nm".into()),
        Slot::Resolved => Some("--".into()),
        Slot::Unmeasured | Slot::Prose => None,
    }
}

fn row_tokens(f: &Finding, baseline: bool, marker: Option<&str>) -> Vec<String> {
    let obs = if baseline {
        f.baseline.as_ref().expect("baseline row")
    } else {
        &f.followup
    };
    let mut tokens: Vec<String> = f
        .description
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if let (Some(m), Some(last)) = (marker, tokens.last_mut()) {
        last.push_str(m);
    }
    if obs.slot == Slot::Prose || obs.slot == Slot::Unmeasured {
        tokens.extend(obs.se_ima.map(|s| s.to_string()));
        return tokens;
    }
    tokens.extend(f.history.iter().filter_map(|s| slot_token(*s)));
    if !baseline {
        if let Some(b) = &f.baseline {
            tokens.extend(slot_token(b.slot));
        }
    }
    tokens.extend(slot_token(obs.slot));
    tokens.extend(obs.se_ima.map(|s| s.to_string()));
    tokens
}

fn push_row(
    out: &mut Vec<String>,
    tokens: &[String],
    p: &CompositionProfile,
    rng: &mut ChaCha8Rng,
) {
    let wrap: f64 = rng.random();
    let cut = if tokens.len() >= 2 {
        rng.random_range(1..tokens.len())
    } else {
        0
    };
    if wrap < p.wrapped_row_rate && cut > 0 {
        out.push(tokens[..cut].join(" "));
        out.push(format!("    {}", tokens[cut..].join(" ")));
    } else {
        out.push(tokens.join(" "));
    }
}

type Member = Box<dyn Fn(&Finding) -> bool>;

fn render_report(
    findings: &[Finding],
    baseline: bool,
    previous: Option<NaiveDate>,
    footnotes: &[Option<(String, String)>],
    p: &CompositionProfile,
    rng: &mut ChaCha8Rng,
) -> String {
    let mut lines: Vec<String> = vec!["CT THORAX/ABDOMEN MET IV CONTRAST".into(), String::new()];
    let indication = INDICATIONS[rng.random_range(0..INDICATIONS.len())];
    lines.push(format!("Klinische gegevens: {indication}"));
    lines.push(match previous {
        Some(d) => format!("Vergelijking met onderzoek van {}.", d.format("%d-%m-%Y")),
        None => "Geen eerder onderzoek ter vergelijking; dit is de uitgangsmeting.".into(),
    });
    lines.push(String::new());
    lines.push("Verslag:".into());
    lines.push("Metingen in mm volgens RECIST 1.1.".into());
    lines.push(String::new());

    let present = |f: &Finding| baseline && f.baseline.is_some() || !baseline;
    let sections: [(&str, Member); 4] = [
        (
            "Target laesies:",
            Box::new(|f: &Finding| f.category == LesionCategory::Target),
        ),
        (
            "Non-target laesies:",
            Box::new(|f: &Finding| f.category == LesionCategory::NonTarget && !f.other_findings),
        ),
        (
            "Nieuwe laesies:",
            Box::new(|f: &Finding| f.category == LesionCategory::New),
        ),
        (
            "Overige bevindingen:",
            Box::new(|f: &Finding| f.other_findings),
        ),
    ];

    for (si, (header, member)) in sections.iter().enumerate() {
        let rows: Vec<usize> = (0..findings.len())
            .filter(|&i| member(&findings[i]) && present(&findings[i]))
            .collect();
        let column_header: f64 = rng.random();
        if rows.is_empty() {
            if si == 3 {
                continue;
            }
            lines.push(header.to_string());
            lines.push("Geen.".into());
            lines.push(String::new());
            continue;
        }
        lines.push(header.to_string());
        if si == 0 && column_header < p.column_header_rate {
            lines.push("Locatie  Eerdere metingen  Huidig  SE-IMA".into());
        }
        let mut notes = Vec::new();
        for &i in &rows {
            let marker = footnotes[i].as_ref().map(|(m, _)| m.as_str());
            let tokens = row_tokens(&findings[i], baseline, marker);
            push_row(&mut lines, &tokens, p, rng);
            if let Some((m, text)) = &footnotes[i] {
                notes.push(format!("{m} {text}"));
            }
        }
        lines.extend(notes);
        lines.push(String::new());
    }

    lines.push("Conclusie:".into());
    lines.push(if baseline {
        "Uitgangsmeting vastgelegd.".into()
    } else {
        "Zie tabel voor beloop van de laesies.".into()
    });
    let mut body = lines.join("\n");
    body.push('\n');
    body
}

fn truth_lesion(
    f: &Finding,
    obs: &Observation,
    label: String,
    footnote: Option<&(String, String)>,
) -> Lesion {
    let mut parts: Vec<&str> = Vec::new();
    if obs.slot == Slot::NotMeasurable {
        parts.push(NOTE_NOT_MEASURABLE);
    }
    if obs.slot == Slot::Resolved {
        parts.push(NOTE_RESOLVED);
    }
    if let Some((_, text)) = footnote {
        parts.push(text);
    }
    if f.other_findings {
        parts.push(NOTE_OTHER_FINDINGS);
    }
    Lesion {
        label: Some(label),
        description: Some(f.description.clone()),
        current_size_mm: match obs.slot {
            Slot::Size(v) => Some(v),
            _ => None,
        },
        se_ima: obs.se_ima.map(|s| s.to_string()),
        note: (!parts.is_empty()).then(|| parts.join(NOTE_SEPARATOR)),
    }
}

fn build_truth(
    findings: &[Finding],
    baseline_uid: &str,
    follow_uid: &str,
    baseline_notes: &[Option<(String, String)>],
    follow_notes: &[Option<(String, String)>],
) -> PairExtraction {
    let mut baseline = ReportExtraction::empty(baseline_uid);
    let mut followup = ReportExtraction::empty(follow_uid);
    for (i, f) in findings.iter().enumerate() {
        let slug = normalize_description(&f.description);
        let list_len = baseline.lesions(f.category).len();
        if let Some(obs) = &f.baseline {
            let label = make_label(f.category, list_len as u32 + 1, &slug).expect("ordinal >= 1");
            baseline.lesions_mut(f.category).push(truth_lesion(
                f,
                obs,
                label.clone(),
                baseline_notes[i].as_ref(),
            ));
            followup.lesions_mut(f.category).push(truth_lesion(
                f,
                &f.followup,
                label,
                follow_notes[i].as_ref(),
            ));
        } else {
            // Follow-up only: numbered after every baseline lesion of the category.
            let ordinal = followup.lesions(f.category).len() as u32 + 1;
            let label = make_label(f.category, ordinal, &slug).expect("ordinal >= 1");
            followup.lesions_mut(f.category).push(truth_lesion(
                f,
                &f.followup,
                label,
                follow_notes[i].as_ref(),
            ));
        }
    }
    PairExtraction::new(baseline, followup)
}

/// Writes `reports.jsonl`, `pairs.jsonl` and `truth.jsonl` into `dir`.
pub fn write_synthetic(dir: impl AsRef<Path>, pairs: &[SyntheticPair]) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    let reports: Vec<&RadiologyReport> = pairs
        .iter()
        .flat_map(|p| [&p.pair.baseline, &p.pair.followup])
        .collect();
    let report_pairs: Vec<&ReportPair> = pairs.iter().map(|p| &p.pair).collect();
    let truth: Vec<TruthRecord> = pairs
        .iter()
        .map(|p| TruthRecord {
            pair_id: p.pair.pair_id(),
            extraction: p.truth.clone(),
        })
        .collect();
    write_jsonl(dir.join("reports.jsonl"), &reports)?;
    write_jsonl(dir.join("pairs.jsonl"), &report_pairs)?;
    write_jsonl(dir.join("truth.jsonl"), &truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_extraction;

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_synthetic(5, 11, &CompositionProfile::default());
        let b = generate_synthetic(5, 11, &CompositionProfile::default());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = generate_synthetic(5, 12, &CompositionProfile::default());
        assert_ne!(a, c);
    }

    #[test]
    fn truth_is_valid() {
        for sp in generate_synthetic(40, 3, &CompositionProfile::stress()) {
            assert!(
                validate_extraction(&sp.truth).is_empty(),
                "{}",
                sp.pair.pair_id()
            );
        }
    }

    #[test]
    fn mean_target_count_near_profile() {
        let pairs = generate_synthetic(50, 7, &CompositionProfile::default());
        let mean = pairs
            .iter()
            .map(|p| p.truth.reports[1].target_lesions.len())
            .sum::<usize>() as f64
            / 50.0;
        assert!((mean - 2.6).abs() <= 0.5, "mean TL {mean}");
    }

    #[test]
    fn layout_rate_does_not_change_truth() {
        let plain = CompositionProfile {
            wrapped_row_rate: 0.0,
            ..CompositionProfile::default()
        };
        let wrapped = CompositionProfile {
            wrapped_row_rate: 1.0,
            ..CompositionProfile::default()
        };
        let a = generate_synthetic(20, 9, &plain);
        let b = generate_synthetic(20, 9, &wrapped);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.truth, y.truth);
            assert_ne!(x.pair.baseline.body, y.pair.baseline.body);
        }
    }

    #[test]
    fn oracle_recovers_truth() {
        use crate::oracle::{extract_pair, OracleConfig};
        for profile in [CompositionProfile::default(), CompositionProfile::stress()] {
            for sp in generate_synthetic(60, 21, &profile) {
                let got = extract_pair(&sp.pair, &OracleConfig::default());
                assert_eq!(
                    got,
                    sp.truth,
                    "{}\n{}",
                    sp.pair.pair_id(),
                    sp.pair.followup.body
                );
            }
        }
    }

    #[test]
    fn new_lesions_only_in_followup() {
        for sp in generate_synthetic(30, 5, &CompositionProfile::default()) {
            assert!(sp.truth.reports[0].new_lesions.is_empty());
        }
    }
}

//! End-to-end acceptance checks. Runs without the libtest harness and
//! prints one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use recist_track::cli;
use recist_track::config::TaskConfig;
use recist_track::corpus::{generate_synthetic, read_jsonl, CompositionProfile};
use recist_track::engine::{
    run_batch, BackendConfig, BackendKind, ExtractionRecord, PromptAssets, ReplayBackend,
};
use recist_track::evaluator::{
    accuracy_levels, auto_judge, two_proportion_z, unit_outcomes, wilson_ci, Attribute,
    AttributeJudgment, JudgmentEntry, Level, PairReviewed, ReportLevelJudgment, ReportVerdict,
    SpuriousLesion, Verdict,
};
use recist_track::model::{parse_se_ima, LesionCategory, PairExtraction, ReportPair, Violation};
use recist_track::oracle::{extract_pair, OracleConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/replay")
}

/// Closed-form Wilson bounds written out independently of the library.
fn wilson_reference(k: f64, n: f64) -> (f64, f64) {
    let z = 1.959963984540054_f64;
    let p = k / n;
    let a = p + z * z / (2.0 * n);
    let b = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt();
    let d = 1.0 + z * z / n;
    ((a - b) / d, (a + b) / d)
}

/// Abramowitz and Stegun 7.1.26, absolute error below 1.5e-7.
fn erf_approx(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    (1.0 - poly * (-x * x).exp()).copysign(x)
}

fn criterion_1() -> Outcome {
    let (lo, hi) = wilson_ci(62, 100, 0.95).map_err(|e| e.to_string())?;
    let (rlo, rhi) = wilson_reference(62.0, 100.0);
    ensure(
        close(lo, 0.522, 0.001) && close(hi, 0.709, 0.001),
        format!("({lo:.4}, {hi:.4}) vs (0.522, 0.709)"),
    )?;
    ensure(
        close(lo, rlo, 1e-9) && close(hi, rhi, 1e-9),
        format!("closed form disagrees: ({rlo}, {rhi})"),
    )?;
    Ok(format!("wilson_ci(62, 100) = ({lo:.4}, {hi:.4})"))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let mut argv = vec!["recist-track"];
    argv.extend_from_slice(args);
    match cli::run(argv) {
        0 => Ok(()),
        code => Err(format!("`{}` exited with {code}", args.join(" "))),
    }
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let (syn, run, judged, summary) = (p("syn"), p("run"), p("judgments.jsonl"), p("summary.json"));
    run_cli(&["synth", "--pairs", "50", "--seed", "7", "--out", &syn])?;
    run_cli(&[
        "extract",
        "--pairs",
        &format!("{syn}/pairs.jsonl"),
        "--backend",
        "oracle",
        "--out",
        &run,
    ])?;
    run_cli(&[
        "judge",
        "--predicted",
        &run,
        "--reference",
        &format!("{syn}/truth.jsonl"),
        "--out",
        &judged,
    ])?;
    run_cli(&["evaluate", "--judgments", &judged, "--out", &summary])?;
    let elapsed = started.elapsed();

    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let cells = v["cells"].as_array().ok_or("summary has no cells")?;
    ensure(
        cells.len() == 9,
        format!("{} cells, expected 9", cells.len()),
    )?;
    for c in cells {
        ensure(
            c["accuracy"].as_f64() == Some(1.0),
            format!("cell below 1.000: {c}"),
        )?;
    }
    ensure(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "9/9 cells at 1.000 in {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn oracle_entries(
    pairs: &[recist_track::corpus::SyntheticPair],
) -> (Vec<PairExtraction>, Vec<JudgmentEntry>) {
    let cfg = OracleConfig::default();
    let mut preds = Vec::new();
    let mut entries = Vec::new();
    for s in pairs {
        let pred = extract_pair(&s.pair, &cfg);
        entries.extend(auto_judge(&pred, &s.truth, &s.pair.pair_id()).into_entries());
        preds.push(pred);
    }
    (preds, entries)
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let stress = generate_synthetic(50, 7, &CompositionProfile::stress());
    let mut features = [0usize; 3];
    for s in &stress {
        for r in s.pair.reports() {
            for line in r.body.lines() {
                let toks: Vec<&str> = line.split_whitespace().collect();
                features[0] += toks.iter().filter(|t| **t == "nm").count();
                features[1] += toks.iter().filter(|t| **t == "--").count();
                features[2] += line.starts_with('*') as usize;
            }
        }
    }
    ensure(
        features.iter().all(|&c| c > 0),
        format!("stress corpus lacks edge rows: {features:?}"),
    )?;
    let (_, entries) = oracle_entries(&stress);
    let s = accuracy_levels(&entries).map_err(|e| e.to_string())?;
    for cat in LesionCategory::ALL {
        let r = s.cell(cat, Level::Attribute).map_err(|e| e.to_string())?;
        ensure(
            r.k == r.n,
            format!("{cat:?} attribute {}/{} under stress", r.k, r.n),
        )?;
    }

    let base = generate_synthetic(50, 7, &CompositionProfile::default());
    let (mut preds, clean_entries) = oracle_entries(&base);
    let clean = accuracy_levels(&clean_entries).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut corrupted = 0u64;
    let mut tracks: BTreeMap<LesionCategory, BTreeSet<(usize, String)>> = BTreeMap::new();
    let mut docs: BTreeMap<LesionCategory, BTreeSet<(usize, usize)>> = BTreeMap::new();
    let mut sizes = 0usize;
    for (pi, pred) in preds.iter_mut().enumerate() {
        for (ri, report) in pred.reports.iter_mut().enumerate() {
            for cat in LesionCategory::ALL {
                for lesion in report.lesions_mut(cat) {
                    let Some(size) = lesion.current_size_mm.as_mut() else {
                        continue;
                    };
                    sizes += 1;
                    if rng.random_bool(0.1) {
                        *size += 1;
                        corrupted += 1;
                        tracks
                            .entry(cat)
                            .or_default()
                            .insert((pi, lesion.label.clone().unwrap_or_default()));
                        docs.entry(cat).or_default().insert((pi, ri));
                    }
                }
            }
        }
    }
    let mut entries = Vec::new();
    for (s, pred) in base.iter().zip(&preds) {
        entries.extend(auto_judge(pred, &s.truth, &s.pair.pair_id()).into_entries());
    }
    let size_wrong = entries
        .iter()
        .filter(|e| matches!(e, JudgmentEntry::Attribute(j) if j.attribute == Attribute::Size && j.verdict == Verdict::Incorrect))
        .count() as u64;
    ensure(
        size_wrong == corrupted,
        format!("{size_wrong} incorrect size judgments for {corrupted} corruptions"),
    )?;
    let other_wrong = entries
        .iter()
        .filter(|e| matches!(e, JudgmentEntry::Attribute(j) if j.attribute != Attribute::Size && j.verdict == Verdict::Incorrect))
        .count();
    ensure(
        other_wrong == 0,
        format!("{other_wrong} non-size judgments flipped"),
    )?;
    let perturbed = accuracy_levels(&entries).map_err(|e| e.to_string())?;
    for cat in LesionCategory::ALL {
        let get = |s: &recist_track::evaluator::EvalSummary, level| {
            s.cell(cat, level).map(|r| (r.k, r.n))
        };
        let (ck, cn) = get(&clean, Level::Lesion).map_err(|e| e.to_string())?;
        let (pk, pn) = get(&perturbed, Level::Lesion).map_err(|e| e.to_string())?;
        let want = tracks.get(&cat).map_or(0, BTreeSet::len) as u64;
        ensure(
            cn == pn && ck - pk == want,
            format!("{cat:?} lesion drop {} vs {want}", ck - pk),
        )?;
        let (ck, cn) = get(&clean, Level::Document).map_err(|e| e.to_string())?;
        let (pk, pn) = get(&perturbed, Level::Document).map_err(|e| e.to_string())?;
        let want = docs.get(&cat).map_or(0, BTreeSet::len) as u64;
        ensure(
            cn == pn && ck - pk == want,
            format!("{cat:?} document drop {} vs {want}", ck - pk),
        )?;
    }
    ensure(corrupted > 0, "no sizes were corrupted")?;
    let elapsed = started.elapsed();
    ensure(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "stress attribute 1.000 (nm {}, resolved {}, footnotes {}); {corrupted}/{sizes} sizes corrupted, \
         lesion and document drops exact",
        features[0], features[1], features[2]
    ))
}

fn violation_kind(v: &Violation) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|x| x["kind"].as_str().map(str::to_string))
        .unwrap_or_default()
}

fn attempt_kinds(r: &ExtractionRecord, i: usize) -> Vec<String> {
    r.attempts[i]
        .gate_result
        .as_ref()
        .map(|g| g.violations().iter().map(violation_kind).collect())
        .unwrap_or_default()
}

fn criterion_4() -> Outcome {
    let dir = fixtures();
    let pairs: Vec<ReportPair> = read_jsonl(dir.join("pairs.jsonl")).map_err(|e| e.to_string())?;
    let assets = PromptAssets::load(&TaskConfig::default()).map_err(|e| e.to_string())?;
    let cfg = BackendConfig {
        kind: BackendKind::Replay,
        replay_dir: Some(dir.join("responses")),
        max_inflight: 4,
        ..BackendConfig::default()
    };
    let mut runs = Vec::new();
    for seed in 0..3 {
        let backend = ReplayBackend::new(dir.join("responses")).with_jitter(15, seed);
        runs.push(run_batch(&pairs, &assets, &backend, &cfg));
    }
    let records = &runs[0];
    let ids: Vec<String> = pairs.iter().map(ReportPair::pair_id).collect();
    for r in &runs {
        let got: Vec<&String> = r.iter().map(|x| &x.pair_id).collect();
        ensure(
            got.iter().copied().eq(ids.iter()),
            "batch order differs from input order",
        )?;
        let finals: Vec<_> = r.iter().map(|x| &x.final_extraction).collect();
        let first: Vec<_> = records.iter().map(|x| &x.final_extraction).collect();
        ensure(finals == first, "jittered runs disagree")?;
    }

    let oracle = OracleConfig::default();
    for (i, r) in records.iter().enumerate() {
        let expected_attempts = match i {
            1 => 2,
            2 => 4,
            _ => 1,
        };
        ensure(
            r.attempts.len() == expected_attempts,
            format!("pair {i}: {} attempts", r.attempts.len()),
        )?;
        if i != 2 {
            ensure(
                r.final_extraction.as_ref() == Some(&extract_pair(&pairs[i], &oracle)),
                format!("pair {i}: wrong final"),
            )?;
        }
    }

    let repaired = &records[1];
    let kinds = attempt_kinds(repaired, 0);
    ensure(
        kinds.contains(&"unknown_field".to_string())
            && kinds.contains(&"non_integer_size".to_string()),
        format!("repair attempt 1 violations {kinds:?}"),
    )?;
    let coercions = &repaired.attempts[0]
        .gate_result
        .as_ref()
        .ok_or("no gate result")?
        .coercions_applied;
    ensure(
        coercions.iter().any(|c| c.contains("stripped")),
        format!("fence not logged: {coercions:?}"),
    )?;
    ensure(repaired.attempts[1].is_ok(), "repair attempt 2 rejected")?;

    let exhausted = &records[2];
    ensure(
        exhausted.final_extraction.is_none(),
        "exhausted pair has a final extraction",
    )?;
    let taxonomy: Vec<String> = (0..4)
        .map(|i| {
            attempt_kinds(exhausted, i)
                .first()
                .cloned()
                .unwrap_or_default()
        })
        .collect();
    let want = [
        "malformed_json",
        "report_count",
        "pattern_violation",
        "duplicate_label",
    ];
    ensure(
        taxonomy == want,
        format!("exhaustion taxonomy {taxonomy:?}"),
    )?;
    Ok(format!(
        "{} pairs, attempts {:?}, exhaustion taxonomy {taxonomy:?}, order stable over 3 jittered runs",
        records.len(),
        records.iter().map(|r| r.attempts.len()).collect::<Vec<_>>()
    ))
}

fn criterion_5() -> Outcome {
    let (z, p) = two_proportion_z(37, 50, 74, 100).map_err(|e| e.to_string())?;
    ensure(
        z == 0.0 && p == 1.0,
        format!("identical proportions gave z={z} p={p}"),
    )?;
    let (z, p) = two_proportion_z(60, 100, 50, 100).map_err(|e| e.to_string())?;
    let pooled = 110.0 / 200.0;
    let z_ref = (0.6 - 0.5) / (pooled * (1.0 - pooled) * (2.0 / 100.0_f64)).sqrt();
    let p_ref = 1.0 - erf_approx(z_ref / 2.0_f64.sqrt());
    ensure(close(z, z_ref, 1e-9), format!("z {z} vs {z_ref}"))?;
    ensure(
        close(p, p_ref, 1e-6) && close(p, 0.155, 0.002),
        format!("p {p} vs {p_ref}"),
    )?;
    let zero = wilson_ci(0, 10, 0.95).map_err(|e| e.to_string())?;
    let full = wilson_ci(10, 10, 0.95).map_err(|e| e.to_string())?;
    ensure(
        zero.0 == 0.0 && zero.1 > 0.0 && zero.1 < 1.0,
        format!("wilson(0,10) = {zero:?}"),
    )?;
    ensure(
        full.1 == 1.0 && full.0 > 0.0 && full.0 < 1.0,
        format!("wilson(10,10) = {full:?}"),
    )?;
    ensure(
        close(zero.1, wilson_reference(0.0, 10.0).1, 1e-9),
        "wilson(0,10) upper bound off",
    )?;
    Ok(format!(
        "p(60/100 vs 50/100) = {p:.4}, wilson(0,10) = [0, {:.4}], wilson(10,10) = [{:.4}, 1]",
        zero.1, full.0
    ))
}

/// Character-class checker that shares no code with the parser.
fn se_ima_reference(token: &str) -> bool {
    let chars: Vec<char> = token.chars().collect();
    let Some(h) = chars.iter().position(|&c| c == '-') else {
        return false;
    };
    let digit = |c: &char| "0123456789".contains(*c);
    let (left, right) = (&chars[..h], &chars[h + 1..]);
    (1..=3).contains(&left.len())
        && (1..=4).contains(&right.len())
        && left.iter().all(digit)
        && right.iter().all(digit)
}

fn token_classes() -> impl Strategy<Value = String> {
    prop_oneof![
        "[0-9]{1,3}-[0-9]{1,4}",
        "[0-9]{0,5}-[0-9]{0,6}",
        "[0-9]{1,4}[-\u{2013}\u{2212}_/.: ][0-9]{1,5}",
        "[ \t]?[0-9]{1,3}-[0-9]{1,4}[ \t.,]?",
        "[+-]?[0-9]{1,3}-[+-]?[0-9]{1,4}",
        "[0-9\u{0660}-\u{0669}\u{FF10}-\u{FF19}]{1,3}-[0-9\u{0660}-\u{0669}]{1,4}",
        "[0-9]{1,3}-[0-9]{1,4}-[0-9]{1,4}",
        "[a-zA-Z]{0,2}[0-9]{1,3}-[0-9]{1,4}[a-zA-Z]{0,2}",
        "\\PC{0,8}",
    ]
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases: 12_000,
        failure_persistence: None,
        ..Config::default()
    });
    let accepted = std::sync::atomic::AtomicUsize::new(0);
    runner
        .run(&token_classes(), |token| {
            let got = parse_se_ima(&token).is_some();
            accepted.fetch_add(got as usize, std::sync::atomic::Ordering::Relaxed);
            if got != se_ima_reference(&token) {
                return Err(TestCaseError::fail(format!("{token:?}: parser {got}")));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(
        elapsed < Duration::from_secs(5),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "12000 cases agree with the reference checker ({} accepted) in {:.2}s",
        accepted.into_inner(),
        elapsed.as_secs_f64()
    ))
}

fn random_judgments(rng: &mut ChaCha8Rng, reader: &str) -> Vec<JudgmentEntry> {
    let mut out = Vec::new();
    for p in 0..rng.random_range(5..25) {
        let pair_id = format!("P{p:03}/a/b");
        out.push(JudgmentEntry::PairReviewed(PairReviewed {
            pair_id: pair_id.clone(),
            reader_id: reader.into(),
        }));
        let error_rate = rng.random_range(0.0..0.3);
        for category in LesionCategory::ALL {
            for l in 0..rng.random_range(0..4u32) {
                let label = format!("{}{}_laesie_{l}", category.prefix(), l + 1);
                for report_index in 0..2u8 {
                    for attribute in Attribute::ALL {
                        out.push(JudgmentEntry::Attribute(AttributeJudgment {
                            pair_id: pair_id.clone(),
                            reader_id: reader.into(),
                            lesion_label: label.clone(),
                            category,
                            report_index,
                            attribute,
                            verdict: Verdict::from_bool(!rng.random_bool(error_rate)),
                        }));
                    }
                }
            }
            if rng.random_bool(0.1) {
                out.push(JudgmentEntry::Spurious(SpuriousLesion {
                    pair_id: pair_id.clone(),
                    reader_id: reader.into(),
                    category,
                    report_index: 1,
                    lesion_label: format!("{}9_extra", category.prefix()),
                }));
            }
            if rng.random_bool(0.05) {
                out.push(JudgmentEntry::Report(ReportLevelJudgment {
                    pair_id: pair_id.clone(),
                    reader_id: reader.into(),
                    category,
                    report_index: 0,
                    verdict: ReportVerdict::HasErrors,
                }));
            }
        }
    }
    out
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = (0usize, 0usize);
    for _ in 0..200 {
        let one = random_judgments(&mut rng, "a");
        let attrs: Vec<&AttributeJudgment> = one
            .iter()
            .filter_map(|e| {
                if let JudgmentEntry::Attribute(j) = e {
                    Some(j)
                } else {
                    None
                }
            })
            .collect();
        for category in LesionCategory::ALL {
            let o = unit_outcomes(&one, category);
            for ((_, pair, label), ok) in &o.lesions {
                let six: Vec<_> = attrs
                    .iter()
                    .filter(|j| &j.pair_id == pair && &j.lesion_label == label)
                    .collect();
                ensure(
                    six.len() == 6,
                    format!("{label} has {} judgments", six.len()),
                )?;
                if *ok {
                    ensure(
                        six.iter().all(|j| j.verdict == Verdict::Correct),
                        format!("{label} correct with an error"),
                    )?;
                }
                checked.0 += 1;
            }
            for ((_, pair, side), clean) in &o.reports {
                if *clean {
                    let bad = attrs.iter().any(|j| {
                        &j.pair_id == pair
                            && j.report_index == *side
                            && j.category == category
                            && j.verdict == Verdict::Incorrect
                    });
                    ensure(
                        !bad,
                        format!("{pair} report {side} clean with an incorrect lesion"),
                    )?;
                    let bad_lesion = o.lesions.iter().any(|((_, p, l), ok)| {
                        p == pair
                            && !ok
                            && attrs.iter().any(|j| {
                                &j.pair_id == p
                                    && &j.lesion_label == l
                                    && j.report_index == *side
                                    && j.verdict == Verdict::Incorrect
                            })
                    });
                    ensure(
                        !bad_lesion,
                        format!("{pair} report {side} clean with a failed lesion"),
                    )?;
                }
                checked.1 += 1;
            }
        }

        let single = accuracy_levels(&one).map_err(|e| e.to_string())?;
        let mut both = one.clone();
        both.extend(one.iter().map(|e| {
            let mut e = e.clone();
            match &mut e {
                JudgmentEntry::Attribute(j) => j.reader_id = "b".into(),
                JudgmentEntry::Report(j) => j.reader_id = "b".into(),
                JudgmentEntry::Spurious(j) => j.reader_id = "b".into(),
                JudgmentEntry::PairReviewed(j) => j.reader_id = "b".into(),
            }
            e
        }));
        let pooled = accuracy_levels(&both).map_err(|e| e.to_string())?;
        ensure(
            single.cells.len() == pooled.cells.len(),
            "pooling changed the cell set",
        )?;
        for (s, p) in single.cells.iter().zip(&pooled.cells) {
            ensure(
                p.rate.n == 2 * s.rate.n
                    && p.rate.k == 2 * s.rate.k
                    && p.rate.accuracy == s.rate.accuracy,
                format!(
                    "{:?}/{:?}: {}/{} pooled to {}/{}",
                    s.category, s.level, s.rate.k, s.rate.n, p.rate.k, p.rate.n
                ),
            )?;
        }
        let (s, p) = (
            single.all_attribute_pair_rate.unwrap(),
            pooled.all_attribute_pair_rate.unwrap(),
        );
        ensure(
            p.n == 2 * s.n && p.accuracy == s.accuracy,
            "pair rate changed under pooling",
        )?;
        ensure(
            pooled.agreement_rate == Some(1.0),
            "identical readers disagree",
        )?;
    }
    Ok(format!(
        "200 fixtures, {} lesions and {} reports checked, pooling exact",
        checked.0, checked.1
    ))
}

fn main() {
    let criteria: [(u8, fn() -> Outcome); 7] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, f) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

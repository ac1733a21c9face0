//! Link lesions across a report pair and repair inconsistent labels.
//!
//! cargo run --example lesion_linking

use recist_track::linker::{harmonize_labels, label_consistency, link_pair};
use recist_track::model::{Lesion, PairExtraction, ReportExtraction};

fn lesion(label: &str, description: &str, size: Option<i64>) -> Lesion {
    Lesion {
        label: Some(label.into()),
        description: Some(description.into()),
        current_size_mm: size,
        se_ima: None,
        note: None,
    }
}

fn main() {
    let mut baseline = ReportExtraction::empty("1.1");
    baseline.target_lesions = vec![
        lesion("TL_1_lever_segment_4a", "Lever segment 4a", Some(42)),
        lesion("TL_2_long_lbk", "Long LBK", Some(17)),
    ];
    let mut followup = ReportExtraction::empty("1.2");
    followup.target_lesions = vec![
        lesion("TL_1_long_lbk", "long lbk", Some(12)),
        lesion("TL_2_lever_segment_4a", "Lever, segment 4A", Some(35)),
    ];

    let x = PairExtraction::new(baseline.clone(), followup.clone());
    println!("before harmonising:");
    for v in label_consistency(&x) {
        println!("   {v}");
    }

    harmonize_labels(&baseline, &mut followup);
    for link in link_pair(&baseline, &followup) {
        let size = |l: &Option<Lesion>| {
            l.as_ref()
                .and_then(|l| l.current_size_mm)
                .map_or("-".into(), |s| s.to_string())
        };
        println!(
            "{:<22} {:?}: {} -> {}",
            link.label,
            link.status,
            size(&link.baseline),
            size(&link.followup)
        );
    }
    let x = PairExtraction::new(baseline, followup);
    println!(
        "violations after harmonising: {}",
        label_consistency(&x).len()
    );
}

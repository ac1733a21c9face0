//! Load a report corpus, select a cohort, form pairs and split them.
//!
//! cargo run --example corpus_pairing

use recist_track::corpus::{
    form_pairs, generate_synthetic, select_cohort, split_debug_test, CompositionProfile, Corpus,
    DEFAULT_KEYWORD, DEFAULT_MIN_HITS,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reports: Vec<_> = generate_synthetic(20, 2, &CompositionProfile::default())
        .into_iter()
        .flat_map(|s| [s.pair.baseline, s.pair.followup])
        .collect();
    let corpus = Corpus::from_reports(reports)?;
    println!(
        "{} reports from {} patients",
        corpus.len(),
        corpus.patient_count()
    );

    let cohort = select_cohort(&corpus, DEFAULT_KEYWORD, DEFAULT_MIN_HITS);
    let pairs = form_pairs(&corpus, &cohort, DEFAULT_KEYWORD);
    println!("{} patients in cohort, {} pairs", cohort.len(), pairs.len());

    let (debug, test) = split_debug_test(&pairs, 5, 42)?;
    println!(
        "debug: {}",
        debug
            .iter()
            .map(|p| p.patient_id.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("test:  {} pairs", test.len());
    Ok(())
}

//! Judge oracle predictions against synthetic truth, with a few sizes
//! deliberately corrupted, and print the accuracy grid.
//!
//! cargo run --example evaluate_run

use recist_track::corpus::{generate_synthetic, CompositionProfile};
use recist_track::evaluator::{accuracy_levels, auto_judge};
use recist_track::oracle::{extract_pair, OracleConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic(40, 11, &CompositionProfile::default());
    let mut entries = Vec::new();
    for (i, s) in corpus.iter().enumerate() {
        let mut predicted = extract_pair(&s.pair, &OracleConfig::default());
        if i % 4 == 0 {
            if let Some(size) = predicted.reports[1]
                .target_lesions
                .first_mut()
                .and_then(|l| l.current_size_mm.as_mut())
            {
                *size += 1;
            }
        }
        entries.extend(auto_judge(&predicted, &s.truth, &s.pair.pair_id()).into_entries());
    }
    let summary = accuracy_levels(&entries)?;
    print!("{}", summary.render_table());
    Ok(())
}

//! Generate a synthetic corpus with embedded ground truth and show its
//! composition.
//!
//! cargo run --example synthetic_corpus -- [pairs] [seed] [out-dir]

use recist_track::corpus::{generate_synthetic, write_synthetic, CompositionProfile};
use recist_track::model::LesionCategory;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(Ok(50), |s| s.parse())?;
    let seed: u64 = args.get(1).map_or(Ok(7), |s| s.parse())?;

    let pairs = generate_synthetic(n, seed, &CompositionProfile::default());
    for category in LesionCategory::ALL {
        let total: usize = pairs
            .iter()
            .map(|p| p.truth.reports[1].lesions(category).len())
            .sum();
        println!(
            "{:<4} {:.2} per follow-up report",
            category.short_name(),
            total as f64 / n as f64
        );
    }
    println!("\n{}", pairs[0].pair.followup.body);

    if let Some(dir) = args.get(2) {
        write_synthetic(dir, &pairs)?;
        println!("wrote reports.jsonl, pairs.jsonl and truth.jsonl to {dir}");
    }
    Ok(())
}

//! Wilson intervals and the two-proportion z-test.
//!
//! cargo run --example statistics

use recist_track::evaluator::{two_proportion_z, wilson_ci};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (k, n) in [(62, 100), (0, 10), (10, 10), (281, 300)] {
        let (lo, hi) = wilson_ci(k, n, 0.95)?;
        println!(
            "{k:>3}/{n:<3} = {:.3}  95% CI {lo:.3}-{hi:.3}",
            k as f64 / n as f64
        );
    }
    for (k1, n1, k2, n2) in [(60, 100, 50, 100), (281, 300, 270, 300), (40, 50, 80, 100)] {
        let (z, p) = two_proportion_z(k1, n1, k2, n2)?;
        println!("{k1}/{n1} vs {k2}/{n2}: z = {z:.3}, p = {p:.4}");
    }
    Ok(())
}

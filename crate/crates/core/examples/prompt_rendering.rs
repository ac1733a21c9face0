//! Render the extraction prompt for a pair and show the output schema.
//!
//! cargo run --example prompt_rendering

use recist_track::config::TaskConfig;
use recist_track::corpus::{generate_synthetic, CompositionProfile};
use recist_track::engine::{build_prompt, output_schema, recover_reports};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = generate_synthetic(1, 3, &CompositionProfile::default())
        .remove(0)
        .pair;
    let bundle = build_prompt(&pair, &TaskConfig::default())?;
    println!(
        "--- system ({} chars)\n{}",
        bundle.system_text.len(),
        bundle.system_text
    );
    println!(
        "--- user ({} chars)\n{}",
        bundle.user_text.len(),
        bundle.user_text
    );
    let recovered = recover_reports(&bundle.user_text).expect("delimited reports");
    assert_eq!(recovered[1].body, pair.followup.body);
    println!(
        "--- schema\n{}",
        serde_json::to_string_pretty(&output_schema())?
    );
    Ok(())
}

//! Extract one synthetic pair through a chat-completion endpoint such as a
//! local Ollama or vLLM server.
//!
//! cargo run --example live_extraction -- http://localhost:11434/api/chat [model]
//!
//! A bearer token is read from RECIST_TRACK_API_KEY when set.

use recist_track::config::TaskConfig;
use recist_track::corpus::{generate_synthetic, CompositionProfile};
use recist_track::engine::{
    extract_with_repair, BackendConfig, BackendKind, LiveBackend, PromptAssets,
};
use recist_track::evaluator::auto_judge;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let Some(url) = args.next() else {
        eprintln!("usage: live_extraction <endpoint-url> [model]");
        return Ok(());
    };
    let mut cfg = BackendConfig {
        kind: BackendKind::Live,
        endpoint_url: Some(url),
        ..BackendConfig::default()
    };
    if let Some(model) = args.next() {
        cfg.model_name = model;
    }
    let sample = generate_synthetic(1, 1, &CompositionProfile::default()).remove(0);
    let record = extract_with_repair(
        &sample.pair,
        &PromptAssets::load(&TaskConfig::default())?,
        &LiveBackend::new(&cfg)?,
        &cfg,
    );
    println!(
        "{} attempts in {:.1}s",
        record.attempts.len(),
        record.wall_time_secs
    );
    match &record.final_extraction {
        Some(x) => {
            let judged = auto_judge(x, &sample.truth, &sample.pair.pair_id());
            println!(
                "{} of {} attribute judgments incorrect",
                judged.incorrect(),
                judged.attributes.len()
            );
        }
        None => println!(
            "no valid extraction; last response:\n{}",
            record.attempts.last().map_or("", |a| &a.raw_response)
        ),
    }
    Ok(())
}

//! Batch extraction with the repair loop, replaying recorded responses,
//! then writing a run directory.
//!
//! cargo run --example batch_extraction -- [out-dir]

use std::path::Path;

use recist_track::config::TaskConfig;
use recist_track::corpus::read_jsonl;
use recist_track::engine::{
    run_batch, write_run, BackendConfig, BackendKind, PromptAssets, ReplayBackend,
};
use recist_track::model::ReportPair;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/replay");
    let pairs: Vec<ReportPair> = read_jsonl(fixtures.join("pairs.jsonl"))?;
    let task = TaskConfig::default();
    let cfg = BackendConfig {
        kind: BackendKind::Replay,
        replay_dir: Some(fixtures.join("responses")),
        ..task.backend.clone()
    };
    let backend = ReplayBackend::new(fixtures.join("responses")).with_jitter(20, 1);
    let records = run_batch(&pairs, &PromptAssets::load(&task)?, &backend, &cfg);

    for r in &records {
        println!(
            "{} attempts={} ok={}",
            r.pair_id,
            r.attempts.len(),
            r.final_extraction.is_some()
        );
        for (i, a) in r.attempts.iter().enumerate() {
            for v in a.gate_result.iter().flat_map(|g| g.violations()) {
                println!("   attempt {i}: {v}");
            }
        }
    }

    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("replay-run"));
    let manifest = write_run(&out, &task.task, &pairs, &records)?;
    println!("run {} written to {}", manifest.run_id, out.display());
    Ok(())
}

//! Serve a run for review, record judgments from two readers over HTTP
//! and fetch the pooled summary.
//!
//! cargo run --example review_server
//!
//! Pass `--keep` to leave the server running on 127.0.0.1:8080.

use std::sync::Arc;

use recist_track::config::TaskConfig;
use recist_track::corpus::{generate_synthetic, CompositionProfile};
use recist_track::engine::{run_batch, write_run, OracleBackend, PromptAssets};
use recist_track::review::{router, JudgmentStore};
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let keep = std::env::args().any(|a| a == "--keep");
    let dir = std::env::temp_dir().join(format!("review-demo-{}", std::process::id()));
    let pairs: Vec<_> = generate_synthetic(3, 5, &CompositionProfile::default())
        .into_iter()
        .map(|s| s.pair)
        .collect();
    let task = TaskConfig::default();
    let records = run_batch(
        &pairs,
        &PromptAssets::load(&task)?,
        &OracleBackend {
            config: task.oracle_config(),
        },
        &task.backend,
    );
    let manifest = write_run(&dir, &task.task, &pairs, &records)?;

    let store = Arc::new(JudgmentStore::open(&dir)?);
    let listener = tokio::net::TcpListener::bind(if keep {
        "127.0.0.1:8080"
    } else {
        "127.0.0.1:0"
    })
    .await?;
    let base = format!("http://{}", listener.local_addr()?);
    let server = tokio::spawn(async move { axum::serve(listener, router(store)).await });
    println!("serving run {} at {base}", manifest.run_id);

    let client = reqwest::Client::new();
    let run = &manifest.run_id;
    let extraction = records[0]
        .final_extraction
        .as_ref()
        .expect("oracle succeeds");
    let labels: Vec<String> = extraction.reports[0]
        .target_lesions
        .iter()
        .filter_map(|l| l.label.clone())
        .collect();
    for reader in ["alice", "bob"] {
        for (i, label) in labels.iter().enumerate() {
            for side in 0..2 {
                for attribute in ["label", "size", "se_ima"] {
                    // bob disputes the follow-up size of the first lesion
                    let ok = !(reader == "bob" && i == 0 && side == 1 && attribute == "size");
                    let body = json!({
                        "kind": "attribute",
                        "pair_id": pairs[0].pair_id(),
                        "reader_id": reader,
                        "lesion_label": label,
                        "category": "target",
                        "report_index": side,
                        "attribute": attribute,
                        "verdict": if ok { "correct" } else { "incorrect" },
                    });
                    client
                        .post(format!("{base}/runs/{run}/judgments"))
                        .json(&body)
                        .send()
                        .await?
                        .error_for_status()?;
                }
            }
        }
    }
    let summary: Value = client
        .get(format!("{base}/runs/{run}/summary?readers=alice,bob"))
        .send()
        .await?
        .json()
        .await?;
    println!("{}", serde_json::to_string_pretty(&summary)?);

    if keep {
        server.await??;
    } else {
        std::fs::remove_dir_all(&dir)?;
    }
    Ok(())
}

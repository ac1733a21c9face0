//! HTTP routing for the review service.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{JudgmentStore, ReviewError};
use crate::engine::PairStatus;
use crate::evaluator::{accuracy_levels, Attribute, EvalError, JudgmentEntry};
use crate::model::{PairExtraction, RadiologyReport};

type Shared = Arc<JudgmentStore>;

impl IntoResponse for ReviewError {
    fn into_response(self) -> Response {
        let status = match &self {
            ReviewError::UnknownRun(_) | ReviewError::UnknownPair(_) | ReviewError::NoJudgments => {
                StatusCode::NOT_FOUND
            }
            ReviewError::UnknownLesion(_)
            | ReviewError::InvalidAttribute(_)
            | ReviewError::InvalidJudgment(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (
            status,
            Json(json!({ "error": self.code(), "message": self.to_string() })),
        )
            .into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairListItem {
    pub pair_id: String,
    pub extraction_status: PairStatus,
    pub lesion_count: usize,
    /// Judgments by the requesting reader; zero without `?reader=`.
    pub judged: usize,
    pub reviewed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDetail {
    pub pair_id: String,
    pub baseline: RadiologyReport,
    pub followup: RadiologyReport,
    pub extraction: PairExtraction,
    /// The requesting reader's own latest judgments for this pair.
    pub judgments: Vec<JudgmentEntry>,
}

#[derive(Debug, Deserialize)]
struct ReaderQuery {
    reader: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ReadersQuery {
    readers: Option<String>,
}

pub fn router(store: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/runs/{run}/pairs", get(list_pairs))
        .route("/runs/{run}/pairs/{*pair}", get(pair_detail))
        .route("/runs/{run}/judgments", post(post_judgment))
        .route("/runs/{run}/summary", get(summary))
        .route("/runs/{run}/export", get(export))
        .with_state(store)
}

fn check_run(store: &JudgmentStore, run: &str) -> Result<(), ReviewError> {
    if run == store.run_id() {
        Ok(())
    } else {
        Err(ReviewError::UnknownRun(run.to_string()))
    }
}

fn own(store: &JudgmentStore, reader: Option<&str>) -> Vec<JudgmentEntry> {
    match reader {
        Some(r) if !r.is_empty() => store.latest(Some(&[r.to_string()])),
        _ => Vec::new(),
    }
}

async fn health(State(store): State<Shared>) -> Json<Value> {
    Json(json!({ "status": "ok", "run_id": store.run_id() }))
}

async fn list_pairs(
    State(store): State<Shared>,
    Path(run): Path<String>,
    Query(q): Query<ReaderQuery>,
) -> Result<Json<Vec<PairListItem>>, ReviewError> {
    check_run(&store, &run)?;
    let mine = own(&store, q.reader.as_deref());
    let mut judged: HashMap<&str, usize> = HashMap::new();
    let mut reviewed: HashMap<&str, bool> = HashMap::new();
    for e in &mine {
        *judged.entry(e.pair_id()).or_default() += 1;
        if matches!(e, JudgmentEntry::PairReviewed(_)) {
            reviewed.insert(e.pair_id(), true);
        }
    }
    let r = store.run();
    let items = r
        .manifest
        .pairs
        .iter()
        .zip(&r.extractions)
        .map(|(entry, x)| PairListItem {
            pair_id: entry.pair_id.clone(),
            extraction_status: entry.status,
            lesion_count: x.lesion_count(),
            judged: judged.get(entry.pair_id.as_str()).copied().unwrap_or(0),
            reviewed: reviewed.contains_key(entry.pair_id.as_str()),
        })
        .collect();
    Ok(Json(items))
}

async fn pair_detail(
    State(store): State<Shared>,
    Path((run, pair)): Path<(String, String)>,
    Query(q): Query<ReaderQuery>,
) -> Result<Json<PairDetail>, ReviewError> {
    check_run(&store, &run)?;
    let r = store.run();
    let idx = r
        .find(&pair)
        .ok_or_else(|| ReviewError::UnknownPair(pair.clone()))?;
    let judgments = own(&store, q.reader.as_deref())
        .into_iter()
        .filter(|e| e.pair_id() == pair)
        .collect();
    Ok(Json(PairDetail {
        pair_id: pair,
        baseline: r.pairs[idx].baseline.clone(),
        followup: r.pairs[idx].followup.clone(),
        extraction: r.extractions[idx].clone(),
        judgments,
    }))
}

fn parse_judgment(body: &[u8]) -> Result<JudgmentEntry, ReviewError> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| ReviewError::InvalidJudgment(e.to_string()))?;
    if let Some(a) = value.get("attribute") {
        if serde_json::from_value::<Attribute>(a.clone()).is_err() {
            return Err(ReviewError::InvalidAttribute(a.to_string()));
        }
    }
    serde_json::from_value(value).map_err(|e| ReviewError::InvalidJudgment(e.to_string()))
}

async fn post_judgment(
    State(store): State<Shared>,
    Path(run): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ReviewError> {
    check_run(&store, &run)?;
    let judgment = parse_judgment(&body)?;
    let key = judgment.key();
    let writer = store.clone();
    tokio::task::spawn_blocking(move || writer.record(judgment))
        .await
        .map_err(|e| ReviewError::InvalidJudgment(format!("writer task failed: {e}")))??;
    Ok(Json(json!({ "status": "recorded", "key": key })))
}

async fn summary(
    State(store): State<Shared>,
    Path(run): Path<String>,
    Query(q): Query<ReadersQuery>,
) -> Result<Response, ReviewError> {
    check_run(&store, &run)?;
    let readers: Option<Vec<String>> = q.readers.map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .map(str::to_string)
            .collect()
    });
    let entries = store.latest(readers.as_deref());
    let summary = match accuracy_levels(&entries) {
        Ok(s) => s,
        Err(EvalError::EmptyInput(_)) => return Err(ReviewError::NoJudgments),
        Err(e) => return Err(ReviewError::InvalidJudgment(e.to_string())),
    };
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        summary.to_canonical_json(),
    )
        .into_response())
}

async fn export(
    State(store): State<Shared>,
    Path(run): Path<String>,
) -> Result<Response, ReviewError> {
    check_run(&store, &run)?;
    let mut body = String::new();
    for e in store.latest(None) {
        body.push_str(&serde_json::to_string(&e).expect("serializable"));
        body.push('\n');
    }
    Ok((
        [
            (header::CONTENT_TYPE, "application/x-ndjson"),
            (
                header::CONTENT_DISPOSITION,
                "attachment; filename=\"judgments.jsonl\"",
            ),
        ],
        body,
    )
        .into_response())
}

//! Prompted extraction with a validate-and-repair loop.

mod backend;
mod prompt;
mod run;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    make_backend, response_text, Backend, BackendConfig, BackendError, BackendKind, BackendRequest,
    ChatMessage, LiveBackend, OracleBackend, ReplayBackend, API_KEY_ENV, DEFAULT_MODEL,
};
pub use prompt::{
    build_prompt, escape_body, output_schema, recover_reports, repair_message, unescape_body,
    PromptAssets, PromptBundle, DEFAULT_EXAMPLE, DEFAULT_TEMPLATE,
};
pub use run::{
    extraction_file_name, load_run, write_run, PairStatus, Run, RunManifest, RunPairEntry,
};

use crate::gate::{parse_and_coerce, GateResult};
use crate::model::{PairExtraction, ReportExtraction, ReportPair};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("cannot read {path}: {source}")]
    Asset {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("run directory {path}: {message}")]
    Run { path: PathBuf, message: String },
}

/// One backend call and what the gate made of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub raw_response: String,
    /// Present when the backend produced text.
    pub gate_result: Option<GateResult>,
    /// Present when the backend call itself failed.
    pub backend_error: Option<String>,
}

impl Attempt {
    pub fn is_ok(&self) -> bool {
        self.gate_result.as_ref().is_some_and(GateResult::is_ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub pair_id: String,
    pub attempts: Vec<Attempt>,
    #[serde(rename = "final")]
    pub final_extraction: Option<PairExtraction>,
    pub backend: BackendConfig,
    pub wall_time_secs: f64,
}

impl ExtractionRecord {
    /// The final extraction, or an empty one carrying the pair's study uids.
    pub fn extraction_or_empty(&self, pair: &ReportPair) -> PairExtraction {
        self.final_extraction.clone().unwrap_or_else(|| {
            PairExtraction::new(
                ReportExtraction::empty(pair.baseline.study_uid.clone()),
                ReportExtraction::empty(pair.followup.study_uid.clone()),
            )
        })
    }
}

/// Calls the backend until the gate accepts a response or `max_retries`
/// re-asks are used up. Each re-ask quotes the previous violations.
pub fn extract_with_repair(
    pair: &ReportPair,
    assets: &PromptAssets,
    backend: &dyn Backend,
    cfg: &BackendConfig,
) -> ExtractionRecord {
    let started = Instant::now();
    let pair_id = pair.pair_id();
    let bundle = assets.render(pair);
    let mut messages = vec![
        ChatMessage::new("system", bundle.system_text),
        ChatMessage::new("user", bundle.user_text),
    ];
    let mut attempts = Vec::new();
    let mut final_extraction = None;

    for attempt in 0..=cfg.max_retries {
        let request = BackendRequest {
            pair,
            pair_id: &pair_id,
            attempt,
            messages: &messages,
        };
        match backend.complete(&request) {
            Ok(raw) => {
                let gate = parse_and_coerce(&raw);
                tracing::debug!(
                    pair_id,
                    attempt,
                    ok = gate.is_ok(),
                    "backend response gated"
                );
                let accepted = gate.extraction().cloned();
                let repair = repair_message(gate.violations());
                attempts.push(Attempt {
                    raw_response: raw.clone(),
                    gate_result: Some(gate),
                    backend_error: None,
                });
                if let Some(x) = accepted {
                    final_extraction = Some(x);
                    break;
                }
                messages.push(ChatMessage::new("assistant", raw));
                messages.push(ChatMessage::new("user", repair));
            }
            Err(e) => {
                tracing::warn!(pair_id, attempt, error = %e, "backend call failed");
                attempts.push(Attempt {
                    raw_response: String::new(),
                    gate_result: None,
                    backend_error: Some(e.to_string()),
                });
            }
        }
    }

    ExtractionRecord {
        pair_id,
        attempts,
        final_extraction,
        backend: cfg.clone(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    }
}

/// Extracts every pair with at most `cfg.max_inflight` concurrent backend
/// calls. Records come back in input order.
pub fn run_batch(
    pairs: &[ReportPair],
    assets: &PromptAssets,
    backend: &dyn Backend,
    cfg: &BackendConfig,
) -> Vec<ExtractionRecord> {
    let workers = cfg.max_inflight.max(1).min(pairs.len());
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, ExtractionRecord)>();
    let mut slots: Vec<Option<ExtractionRecord>> = vec![None; pairs.len()];

    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(pair) = pairs.get(i) else { break };
                let record = extract_with_repair(pair, assets, backend, cfg);
                if tx.send((i, record)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, record) in rx {
            slots[i] = Some(record);
        }
    });

    slots
        .into_iter()
        .map(|r| r.expect("every index processed"))
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{RadiologyReport, Violation};
    use std::sync::Mutex;

    pub(crate) fn sample_pair() -> ReportPair {
        let r = |uid: &str, date: &str, body: &str| RadiologyReport {
            patient_id: "p1".into(),
            study_uid: uid.into(),
            study_date: date.parse().unwrap(),
            body: body.into(),
        };
        ReportPair::new(
            r("1.1", "2023-01-01", "Target laesies:\nLever 28 3-112\n"),
            r("1.2", "2023-04-01", "Target laesies:\nLever 28 19 3-110\n"),
        )
        .unwrap()
    }

    /// Scripted responses per attempt; records the messages it was sent.
    struct Scripted {
        responses: Vec<Result<String, ()>>,
        seen: Mutex<Vec<usize>>,
    }

    impl Backend for Scripted {
        fn complete(&self, r: &BackendRequest<'_>) -> Result<String, BackendError> {
            self.seen.lock().unwrap().push(r.messages.len());
            match self.responses.get(r.attempt) {
                Some(Ok(s)) => Ok(s.clone()),
                _ => Err(BackendError::Timeout { secs: 1.0 }),
            }
        }
    }

    fn good() -> String {
        OracleBackend::default()
            .complete(&BackendRequest {
                pair: &sample_pair(),
                pair_id: "",
                attempt: 0,
                messages: &[],
            })
            .unwrap()
    }

    #[test]
    fn first_attempt_success() {
        let b = Scripted {
            responses: vec![Ok(good())],
            seen: Mutex::new(vec![]),
        };
        let rec = extract_with_repair(
            &sample_pair(),
            &PromptAssets::default(),
            &b,
            &BackendConfig::default(),
        );
        assert_eq!(rec.attempts.len(), 1);
        assert!(rec.final_extraction.is_some());
        assert!(rec.wall_time_secs >= 0.0);
    }

    #[test]
    fn repair_quotes_violations() {
        let b = Scripted {
            responses: vec![Ok("not json".into()), Ok(good())],
            seen: Mutex::new(vec![]),
        };
        let rec = extract_with_repair(
            &sample_pair(),
            &PromptAssets::default(),
            &b,
            &BackendConfig::default(),
        );
        assert_eq!(rec.attempts.len(), 2);
        assert!(matches!(
            rec.attempts[0].gate_result.as_ref().unwrap().violations(),
            [Violation::MalformedJson { .. }]
        ));
        assert_eq!(*b.seen.lock().unwrap(), vec![2, 4]);
    }

    #[test]
    fn retries_are_bounded() {
        let b = Scripted {
            responses: vec![Ok("x".into()); 10],
            seen: Mutex::new(vec![]),
        };
        let cfg = BackendConfig {
            max_retries: 2,
            ..Default::default()
        };
        let rec = extract_with_repair(&sample_pair(), &PromptAssets::default(), &b, &cfg);
        assert_eq!(rec.attempts.len(), 3);
        assert!(rec.final_extraction.is_none());
        assert_eq!(rec.extraction_or_empty(&sample_pair()).lesion_count(), 0);
    }

    #[test]
    fn backend_errors_count_as_attempts() {
        let b = Scripted {
            responses: vec![],
            seen: Mutex::new(vec![]),
        };
        let rec = extract_with_repair(
            &sample_pair(),
            &PromptAssets::default(),
            &b,
            &BackendConfig::default(),
        );
        assert_eq!(rec.attempts.len(), 4);
        assert!(rec.attempts.iter().all(|a| a.backend_error.is_some()));
    }

    #[test]
    fn empty_batch() {
        assert!(run_batch(
            &[],
            &PromptAssets::default(),
            &OracleBackend::default(),
            &BackendConfig::default()
        )
        .is_empty());
    }
}

//! Command-line entry point. Stages exchange files, so each one can be run
//! and inspected on its own.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{load_task, TaskConfig};
use crate::corpus::{
    form_pairs, generate_synthetic, load_corpus, read_jsonl, select_cohort, split_debug_test,
    write_jsonl, write_synthetic, CompositionProfile, TruthRecord, DEFAULT_KEYWORD,
    DEFAULT_MIN_HITS,
};
use crate::engine::{load_run, make_backend, run_batch, write_run, BackendKind, PromptAssets};
use crate::evaluator::{
    accuracy_levels, auto_judge, latest_wins, read_judgments, write_judgments, EvalError,
};
use crate::model::{PairExtraction, ReportExtraction, ReportPair};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "recist-track",
    version,
    about = "RECIST lesion extraction, linking and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a report corpus and write it back in normalised form.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select patients whose reports mention the keyword often enough.
    Cohort {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = DEFAULT_KEYWORD)]
        keyword: String,
        #[arg(long, default_value_t = DEFAULT_MIN_HITS)]
        min_hits: usize,
        /// Patient ids, one per line; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Form consecutive report pairs for a cohort.
    Pair {
        #[arg(long)]
        corpus: PathBuf,
        /// Patient id file from `cohort`; the default cohort when omitted.
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long, default_value = DEFAULT_KEYWORD)]
        keyword: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded debug/test split of a pair file.
    Split {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value_t = 10)]
        debug: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving debug.jsonl and test.jsonl.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with ground truth.
    Synth {
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// `default`, `stress`, or a JSON profile file.
        #[arg(long, default_value = "default")]
        profile: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract lesions from report pairs into a run directory.
    Extract(ExtractArgs),
    /// Judge predicted extractions against a truth file.
    Judge {
        /// Run directory or truth-format JSON lines file.
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise judgment files (pooled by concatenation).
    Evaluate {
        #[arg(long, num_args = 1..)]
        judgments: Vec<PathBuf>,
        /// Summary JSON; the text table always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a run for reader review.
    Serve {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Pair file (JSON lines of report pairs).
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    task: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_inflight: Option<usize>,
    #[arg(long)]
    max_retries: Option<usize>,
    #[arg(long)]
    replay_dir: Option<PathBuf>,
    /// Run directory; defaults to `<task output_dir>/<task name>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on operational errors, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e @ CliError::Usage(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { corpus, out } => {
            let c = load_corpus(&corpus).map_err(fail)?;
            write_jsonl(&out, c.reports()).map_err(fail)?;
            println!("{} reports, {} patients", c.len(), c.patient_count());
            Ok(())
        }
        Command::Cohort {
            corpus,
            keyword,
            min_hits,
            out,
        } => {
            if min_hits == 0 {
                return Err(CliError::Usage("--min-hits must be at least 1".into()));
            }
            let c = load_corpus(&corpus).map_err(fail)?;
            let ids = select_cohort(&c, &keyword, min_hits);
            let text: String = ids.iter().map(|p| format!("{p}\n")).collect();
            match out {
                Some(path) => {
                    fs::write(&path, text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
                    println!("{} patients", ids.len());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Pair {
            corpus,
            cohort,
            keyword,
            out,
        } => {
            let c = load_corpus(&corpus).map_err(fail)?;
            let patients = match cohort {
                Some(path) => fs::read_to_string(&path)
                    .map_err(|e| fail(format!("{}: {e}", path.display())))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
                None => select_cohort(&c, &keyword, DEFAULT_MIN_HITS),
            };
            let pairs = form_pairs(&c, &patients, &keyword);
            write_jsonl(&out, &pairs).map_err(fail)?;
            println!("{} pairs", pairs.len());
            Ok(())
        }
        Command::Split {
            pairs,
            debug,
            seed,
            out,
        } => {
            let all: Vec<ReportPair> = read_jsonl(&pairs).map_err(fail)?;
            if debug > all.len() {
                return Err(CliError::Usage(format!(
                    "--debug {debug} exceeds the {} available pairs",
                    all.len()
                )));
            }
            let (d, t) = split_debug_test(&all, debug, seed).map_err(fail)?;
            fs::create_dir_all(&out).map_err(|e| fail(format!("{}: {e}", out.display())))?;
            write_jsonl(out.join("debug.jsonl"), &d).map_err(fail)?;
            write_jsonl(out.join("test.jsonl"), &t).map_err(fail)?;
            println!("debug {} / test {}", d.len(), t.len());
            Ok(())
        }
        Command::Synth {
            pairs,
            seed,
            profile,
            out,
        } => {
            if pairs == 0 {
                return Err(CliError::Usage("--pairs must be at least 1".into()));
            }
            let profile = load_profile(&profile)?;
            let generated = generate_synthetic(pairs, seed, &profile);
            write_synthetic(&out, &generated).map_err(fail)?;
            println!("{} pairs written to {}", generated.len(), out.display());
            Ok(())
        }
        Command::Extract(args) => extract(args),
        Command::Judge {
            predicted,
            reference,
            out,
        } => judge(&predicted, &reference, &out),
        Command::Evaluate { judgments, out } => evaluate(&judgments, out.as_deref()),
        Command::Serve { run, port, host } => {
            let rt = tokio::runtime::Runtime::new().map_err(fail)?;
            rt.block_on(crate::review::serve(&run, SocketAddr::new(host, port)))
                .map_err(fail)
        }
    }
}

fn load_profile(name: &str) -> Result<CompositionProfile, CliError> {
    if let Some(p) = CompositionProfile::named(name) {
        return Ok(p);
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "--profile {name:?} is neither a named profile nor a file"
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| fail(format!("{name}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| fail(format!("{name}: {e}")))
}

fn extract(args: ExtractArgs) -> Result<(), CliError> {
    let mut task = match &args.task {
        Some(p) => load_task(p).map_err(fail)?,
        None => TaskConfig::default(),
    };
    let b = &mut task.backend;
    if let Some(k) = args.backend {
        b.kind = k;
    }
    if args.endpoint.is_some() {
        b.endpoint_url = args.endpoint.clone();
    }
    if let Some(m) = &args.model {
        b.model_name = m.clone();
    }
    if let Some(t) = args.temperature {
        b.temperature = t;
    }
    if let Some(n) = args.max_inflight {
        b.max_inflight = n;
    }
    if let Some(n) = args.max_retries {
        b.max_retries = n;
    }
    if args.replay_dir.is_some() {
        b.replay_dir = args.replay_dir.clone();
    }
    match b.kind {
        BackendKind::Live if b.endpoint_url.is_none() => {
            return Err(CliError::Usage(
                "--endpoint is required with --backend live".into(),
            ))
        }
        BackendKind::Replay if b.replay_dir.is_none() => {
            return Err(CliError::Usage(
                "--replay-dir is required with --backend replay".into(),
            ))
        }
        _ if b.max_inflight == 0 => {
            return Err(CliError::Usage("--max-inflight must be at least 1".into()))
        }
        _ => {}
    }

    let pairs: Vec<ReportPair> = read_jsonl(&args.pairs).map_err(fail)?;
    let assets = PromptAssets::load(&task).map_err(fail)?;
    let backend = make_backend(&task.backend, &task.oracle_config()).map_err(fail)?;
    let records = run_batch(&pairs, &assets, backend.as_ref(), &task.backend);
    let out = args.out.unwrap_or_else(|| task.output_dir.join(&task.task));
    let manifest = write_run(&out, &task.task, &pairs, &records).map_err(fail)?;
    let ok = records
        .iter()
        .filter(|r| r.final_extraction.is_some())
        .count();
    println!(
        "{ok}/{} pairs extracted into {} (run {})",
        records.len(),
        out.display(),
        manifest.run_id
    );
    Ok(())
}

fn predicted_map(path: &Path) -> Result<HashMap<String, PairExtraction>, CliError> {
    if path.is_dir() {
        let run = load_run(path).map_err(fail)?;
        Ok(run
            .pairs
            .iter()
            .map(|p| p.pair_id())
            .zip(run.extractions)
            .collect())
    } else {
        let recs: Vec<TruthRecord> = read_jsonl(path).map_err(fail)?;
        Ok(recs
            .into_iter()
            .map(|r| (r.pair_id, r.extraction))
            .collect())
    }
}

fn judge(predicted: &Path, reference: &Path, out: &Path) -> Result<(), CliError> {
    let predicted = predicted_map(predicted)?;
    let reference: Vec<TruthRecord> = read_jsonl(reference).map_err(fail)?;
    let mut entries = Vec::new();
    let mut missing = 0;
    for r in &reference {
        let p = predicted.get(&r.pair_id).cloned().unwrap_or_else(|| {
            missing += 1;
            let uid = |i: usize| {
                r.extraction
                    .reports
                    .get(i)
                    .map(|x| x.study_uid.clone())
                    .unwrap_or_default()
            };
            PairExtraction::new(
                ReportExtraction::empty(uid(0)),
                ReportExtraction::empty(uid(1)),
            )
        });
        entries.extend(auto_judge(&p, &r.extraction, &r.pair_id).into_entries());
    }
    if missing > 0 {
        tracing::warn!(
            missing,
            "reference pairs without a prediction were judged against an empty extraction"
        );
    }
    write_judgments(out, &entries).map_err(fail)?;
    println!(
        "{} judgment entries for {} pairs",
        entries.len(),
        reference.len()
    );
    Ok(())
}

fn evaluate(files: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    if files.is_empty() {
        return Err(fail(EvalError::EmptyInput(
            "no judgment files given".into(),
        )));
    }
    let mut entries = Vec::new();
    for f in files {
        entries.extend(read_judgments(f).map_err(fail)?);
    }
    let summary = accuracy_levels(&latest_wins(entries)).map_err(fail)?;
    if let Some(path) = out {
        fs::write(path, summary.to_canonical_json() + "\n")
            .map_err(|e| fail(format!("{}: {e}", path.display())))?;
    }
    print!("{}", summary.render_table());
    Ok(())
}

//! Prompt assembly for one report pair.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::EngineError;
use crate::config::TaskConfig;
use crate::model::{LesionCategory, RadiologyReport, ReportPair};
use crate::oracle::{extract_pair, OracleConfig};

pub const DEFAULT_TEMPLATE: &str = include_str!("../../assets/prompt_template.txt");
pub const DEFAULT_EXAMPLE: &str = include_str!("../../assets/example.txt");

const SCHEMA_PLACEHOLDER: &str = "{{schema}}";
const BASELINE_TAG: &str = "BASELINE";
const FOLLOWUP_TAG: &str = "FOLLOW-UP";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
}

/// Template and in-context example text, loaded once per run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptAssets {
    pub template: String,
    pub example: String,
    pub oracle: OracleConfig,
}

impl Default for PromptAssets {
    fn default() -> Self {
        PromptAssets {
            template: DEFAULT_TEMPLATE.to_string(),
            example: DEFAULT_EXAMPLE.to_string(),
            oracle: OracleConfig::default(),
        }
    }
}

fn read(path: &Path) -> Result<String, EngineError> {
    fs::read_to_string(path).map_err(|source| EngineError::Asset {
        path: path.to_path_buf(),
        source,
    })
}

impl PromptAssets {
    /// Reads the task's template and example; the built-in texts fill in
    /// whatever the task leaves unset.
    pub fn load(task: &TaskConfig) -> Result<Self, EngineError> {
        let template = match &task.prompt_template {
            Some(p) => read(p)?,
            None => DEFAULT_TEMPLATE.to_string(),
        };
        let example = match &task.example {
            Some(p) => read(p)?,
            None => DEFAULT_EXAMPLE.to_string(),
        };
        Ok(PromptAssets {
            template,
            example,
            oracle: task.oracle_config(),
        })
    }

    pub fn render(&self, pair: &ReportPair) -> PromptBundle {
        let schema = serde_json::to_string_pretty(&output_schema()).expect("static schema");
        let system_text = self.template.replace(SCHEMA_PLACEHOLDER, &schema);

        let mut user_text = String::new();
        if let Some(example_output) = self.example_output() {
            user_text.push_str("Example input:\n");
            user_text.push_str(self.example.trim_end());
            user_text.push_str("\n\nExample output:\n");
            user_text.push_str(&example_output);
            user_text.push_str("\n\n");
        }
        user_text.push_str("Report pair to extract:\n");
        user_text.push_str(&delimit(BASELINE_TAG, &pair.baseline));
        user_text.push_str(&delimit(FOLLOWUP_TAG, &pair.followup));
        PromptBundle {
            system_text,
            user_text,
        }
    }

    /// The reference extraction of the in-context example, produced by the
    /// rule-based extractor so the example can never contradict the rules.
    fn example_output(&self) -> Option<String> {
        let [baseline, followup] = recover_reports(&self.example)?;
        let pair = ReportPair::new(baseline, followup).ok()?;
        let x = extract_pair(&pair, &self.oracle);
        Some(serde_json::to_string_pretty(&x).expect("serializable"))
    }
}

/// Assembles the prompt for `pair` under `task`.
pub fn build_prompt(pair: &ReportPair, task: &TaskConfig) -> Result<PromptBundle, EngineError> {
    Ok(PromptAssets::load(task)?.render(pair))
}

/// JSON schema of the canonical pair extraction.
pub fn output_schema() -> Value {
    let nullable = |t: &str| json!({ "type": [t, "null"] });
    let lesion = json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["label", "description", "current_size_mm", "se_ima", "note"],
        "properties": {
            "label": { "type": ["string", "null"], "pattern": "^(TL|NTL|NL)_" },
            "description": nullable("string"),
            "current_size_mm": { "type": ["integer", "null"], "minimum": 0, "maximum": 10000 },
            "se_ima": { "type": ["string", "null"], "pattern": "^\\d{1,3}-\\d{1,4}$" },
            "note": nullable("string"),
        }
    });
    let mut report_props = serde_json::Map::new();
    report_props.insert("study_uid".into(), json!({ "type": "string" }));
    for c in LesionCategory::ALL {
        report_props.insert(
            c.field_name().into(),
            json!({ "type": "array", "items": lesion.clone() }),
        );
    }
    let mut required = vec!["study_uid".to_string()];
    required.extend(
        LesionCategory::ALL
            .iter()
            .map(|c| c.field_name().to_string()),
    );
    json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["reports"],
        "properties": {
            "reports": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": required,
                    "properties": report_props,
                }
            }
        }
    })
}

/// Body lines starting with the delimiter prefix or a backslash get one
/// extra leading backslash, so delimiter lines are unambiguous.
pub fn escape_body(body: &str) -> String {
    body.split('\n')
        .map(|l| {
            if l.starts_with("<<<") || l.starts_with('\\') {
                format!("\\{l}")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn unescape_body(text: &str) -> String {
    text.split('\n')
        .map(|l| l.strip_prefix('\\').unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n")
}

fn delimit(tag: &str, report: &RadiologyReport) -> String {
    format!(
        "<<<{tag} study_uid={} date={}>>>\n{}\n<<<END {tag}>>>\n",
        report.study_uid,
        report.study_date,
        escape_body(&report.body)
    )
}

/// Recovers the last delimited baseline and follow-up reports from a
/// prompt text. Patient ids are not part of the prompt and come back as
/// `"unknown"`.
pub fn recover_reports(text: &str) -> Option<[RadiologyReport; 2]> {
    let lines: Vec<&str> = text.split('\n').collect();
    let parse = |tag: &str| -> Option<RadiologyReport> {
        let open = format!("<<<{tag} ");
        let close = format!("<<<END {tag}>>>");
        let start = lines.iter().rposition(|l| l.starts_with(&open))?;
        let header = lines[start].strip_prefix(&open)?.strip_suffix(">>>")?;
        let mut uid = None;
        let mut date = None;
        for field in header.split_whitespace() {
            if let Some(v) = field.strip_prefix("study_uid=") {
                uid = Some(v.to_string());
            } else if let Some(v) = field.strip_prefix("date=") {
                date = v.parse::<NaiveDate>().ok();
            }
        }
        let end = start + 1 + lines[start + 1..].iter().position(|l| *l == close)?;
        Some(RadiologyReport {
            patient_id: "unknown".into(),
            study_uid: uid?,
            study_date: date?,
            body: unescape_body(&lines[start + 1..end].join("\n")),
        })
    };
    Some([parse(BASELINE_TAG)?, parse(FOLLOWUP_TAG)?])
}

/// Follow-up message asking the backend to fix its previous answer.
pub fn repair_message(violations: &[crate::model::Violation]) -> String {
    let mut text = String::from(
        "Your previous answer was rejected by the output validator. Problems found:\n",
    );
    for v in violations {
        text.push_str("- ");
        text.push_str(&v.to_string());
        text.push('\n');
    }
    text.push_str("Return the corrected JSON object only, with no code fences or commentary.");
    text
}

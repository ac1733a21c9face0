//! Strict parsing of raw backend text into a [`PairExtraction`].
//!
//! A short whitelist of coercions is applied and logged: surrounding prose
//! and code fences are stripped, digit-string sizes become integers, and
//! absent lists or optional fields are filled in. Everything else that
//! deviates from the canonical form is a [`Violation`].

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::model::{
    validate_extraction, Lesion, LesionCategory, PairExtraction, ReportExtraction, Violation,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum GateOutcome {
    Ok(PairExtraction),
    Violations(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateResult {
    pub outcome: GateOutcome,
    pub coercions_applied: Vec<String>,
}

impl GateResult {
    pub fn is_ok(&self) -> bool {
        matches!(self.outcome, GateOutcome::Ok(_))
    }

    pub fn extraction(&self) -> Option<&PairExtraction> {
        match &self.outcome {
            GateOutcome::Ok(x) => Some(x),
            GateOutcome::Violations(_) => None,
        }
    }

    pub fn violations(&self) -> &[Violation] {
        match &self.outcome {
            GateOutcome::Ok(_) => &[],
            GateOutcome::Violations(v) => v,
        }
    }
}

const LESION_FIELDS: [&str; 5] = ["label", "description", "current_size_mm", "se_ima", "note"];

/// Returns the text span of the first complete JSON object or array in
/// `raw`, or `raw` unchanged when there is none.
pub fn strip_noise(raw: &str) -> &str {
    for (start, c) in raw.char_indices() {
        if c != '{' && c != '[' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&raw[start..]).into_iter::<Value>();
        if let Some(Ok(_)) = stream.next() {
            return &raw[start..start + stream.byte_offset()];
        }
    }
    raw
}

/// Parses, coerces and validates one backend response.
pub fn parse_and_coerce(raw: &str) -> GateResult {
    let mut coercions = Vec::new();
    let text = strip_noise(raw);
    if text.len() != raw.trim().len() {
        coercions.push("stripped text outside the JSON value".to_string());
    }
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            return GateResult {
                outcome: GateOutcome::Violations(vec![Violation::MalformedJson {
                    message: e.to_string(),
                }]),
                coercions_applied: coercions,
            }
        }
    };

    let mut violations = Vec::new();
    let extraction = coerce_pair(&value, &mut coercions, &mut violations);
    if violations.is_empty() {
        violations.extend(validate_extraction(&extraction));
    }
    let outcome = if violations.is_empty() {
        GateOutcome::Ok(extraction)
    } else {
        GateOutcome::Violations(violations)
    };
    GateResult {
        outcome,
        coercions_applied: coercions,
    }
}

fn schema(path: &str, message: impl Into<String>) -> Violation {
    Violation::SchemaViolation {
        path: path.to_string(),
        message: message.into(),
    }
}

fn coerce_pair(value: &Value, log: &mut Vec<String>, out: &mut Vec<Violation>) -> PairExtraction {
    let mut pair = PairExtraction {
        reports: Vec::new(),
    };
    let Some(obj) = value.as_object() else {
        out.push(schema("$", "expected an object with key \"reports\""));
        return pair;
    };
    for key in obj.keys().filter(|k| k.as_str() != "reports") {
        out.push(Violation::UnknownField { path: key.clone() });
    }
    let Some(reports) = obj.get("reports").and_then(Value::as_array) else {
        out.push(schema("reports", "expected an array of two reports"));
        return pair;
    };
    if reports.len() != 2 {
        out.push(Violation::ReportCount {
            found: reports.len(),
        });
    }
    for (ri, report) in reports.iter().enumerate() {
        let path = format!("reports[{ri}]");
        if let Some(r) = coerce_report(report, &path, log, out) {
            pair.reports.push(r);
        }
    }
    pair
}

fn coerce_report(
    value: &Value,
    path: &str,
    log: &mut Vec<String>,
    out: &mut Vec<Violation>,
) -> Option<ReportExtraction> {
    let Some(obj) = value.as_object() else {
        out.push(schema(path, "expected an object"));
        return None;
    };
    let known =
        |k: &str| k == "study_uid" || LesionCategory::ALL.iter().any(|c| c.field_name() == k);
    for key in obj.keys().filter(|k| !known(k)) {
        out.push(Violation::UnknownField {
            path: format!("{path}.{key}"),
        });
    }
    let study_uid = match obj.get("study_uid") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        _ => {
            out.push(schema(
                &format!("{path}.study_uid"),
                "expected a non-empty string",
            ));
            String::new()
        }
    };
    let mut report = ReportExtraction::empty(study_uid);
    for category in LesionCategory::ALL {
        let list_path = format!("{path}.{}", category.field_name());
        match obj.get(category.field_name()) {
            None | Some(Value::Null) => log.push(format!("{list_path}: missing list set to []")),
            Some(Value::Array(items)) => {
                for (li, item) in items.iter().enumerate() {
                    let lesion_path = format!("{list_path}[{li}]");
                    if let Some(l) = coerce_lesion(item, &lesion_path, log, out) {
                        report.lesions_mut(category).push(l);
                    }
                }
            }
            Some(_) => out.push(schema(&list_path, "expected an array")),
        }
    }
    Some(report)
}

fn coerce_lesion(
    value: &Value,
    path: &str,
    log: &mut Vec<String>,
    out: &mut Vec<Violation>,
) -> Option<Lesion> {
    let Some(obj) = value.as_object() else {
        out.push(schema(path, "expected an object"));
        return None;
    };
    for key in obj.keys().filter(|k| !LESION_FIELDS.contains(&k.as_str())) {
        out.push(Violation::UnknownField {
            path: format!("{path}.{key}"),
        });
    }
    for field in LESION_FIELDS.iter().filter(|f| !obj.contains_key(**f)) {
        log.push(format!("{path}.{field}: absent, set to null"));
    }
    let lesion = Lesion {
        label: text_field(obj, "label", path, out),
        description: text_field(obj, "description", path, out),
        current_size_mm: size_field(obj, path, log, out),
        se_ima: text_field(obj, "se_ima", path, out),
        note: text_field(obj, "note", path, out),
    };
    if lesion.is_empty() {
        out.push(Violation::EmptyLesion {
            path: path.to_string(),
        });
    }
    Some(lesion)
}

fn text_field(
    obj: &Map<String, Value>,
    field: &str,
    path: &str,
    out: &mut Vec<Violation>,
) -> Option<String> {
    match obj.get(field) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(other) => {
            out.push(schema(
                &format!("{path}.{field}"),
                format!("expected a string or null, got {other}"),
            ));
            None
        }
    }
}

fn size_field(
    obj: &Map<String, Value>,
    path: &str,
    log: &mut Vec<String>,
    out: &mut Vec<Violation>,
) -> Option<i64> {
    let field_path = format!("{path}.current_size_mm");
    match obj.get("current_size_mm") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => match n.as_i64() {
            Some(v) => Some(v),
            None => {
                out.push(Violation::NonIntegerSize {
                    path: field_path,
                    value: n.to_string(),
                });
                None
            }
        },
        Some(Value::String(s)) => {
            let t = s.trim();
            let digits = t.strip_prefix('-').unwrap_or(t);
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                match t.parse::<i64>() {
                    Ok(v) => {
                        log.push(format!("{field_path}: string {s:?} coerced to integer {v}"));
                        Some(v)
                    }
                    Err(_) => {
                        out.push(schema(&field_path, format!("integer out of range: {s:?}")));
                        None
                    }
                }
            } else if t.parse::<f64>().is_ok() {
                out.push(Violation::NonIntegerSize {
                    path: field_path,
                    value: s.clone(),
                });
                None
            } else {
                out.push(schema(
                    &field_path,
                    format!("expected an integer or null, got {s:?}"),
                ));
                None
            }
        }
        Some(other) => {
            out.push(schema(
                &field_path,
                format!("expected an integer or null, got {other}"),
            ));
            None
        }
    }
}

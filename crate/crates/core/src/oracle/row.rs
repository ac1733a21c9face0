//! Token classification and the per-row measurement rules.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::sections::RawRow;
use crate::model::{parse_se_ima, SeIma, MAX_SIZE_MM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenKind {
    SeIma(SeIma),
    Int(i64),
    NotMeasurable,
    Dash,
    Unit,
    Word,
}

pub(crate) fn classify(token: &str) -> TokenKind {
    if let Some(s) = parse_se_ima(token) {
        return TokenKind::SeIma(s);
    }
    if !token.is_empty() && token.len() <= 6 && token.bytes().all(|b| b.is_ascii_digit()) {
        let v: i64 = token.parse().expect("ascii digits");
        if v <= MAX_SIZE_MM {
            return TokenKind::Int(v);
        }
        return TokenKind::Word;
    }
    if matches!(token, "-" | "--" | "---" | "\u{2013}" | "\u{2014}") {
        return TokenKind::Dash;
    }
    match token.to_ascii_lowercase().as_str() {
        "nm" | "n.m." | "nm." => TokenKind::NotMeasurable,
        "mm" => TokenKind::Unit,
        _ => TokenKind::Word,
    }
}

/// Splits trailing footnote asterisks off a token: `"laesie*"` → `("laesie", Some("*"))`.
pub(crate) fn strip_footnote_marker(token: &str) -> (&str, Option<&str>) {
    let base = token.trim_end_matches('*');
    if base.len() == token.len() {
        (token, None)
    } else {
        (base, Some(&token[base.len()..]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    NotMeasurable,
    Resolved,
    Footnoted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowParse {
    pub description: String,
    pub historical_sizes_mm: Vec<i64>,
    pub current_size_mm: Option<i64>,
    pub se_ima: Option<SeIma>,
    pub flags: BTreeSet<RowFlag>,
    pub footnote: Option<String>,
}

/// Applies the measurement rules to one logical row.
///
/// The last series-image token is the locator. The measurement slot is the
/// rightmost integer, `nm` or dash token before it (or anywhere in the row
/// when there is no locator). The contiguous run of measurement tokens ending
/// at that slot holds the historical sizes; everything before the run is the
/// description. Series-image tokens never count as sizes.
pub fn parse_row(row: &RawRow, footnotes: &BTreeMap<String, String>) -> RowParse {
    let mut marker: Option<String> = None;
    let mut tokens: Vec<(&str, TokenKind)> = Vec::new();
    for raw in row.text.split_whitespace() {
        let (token, m) = strip_footnote_marker(raw);
        if let Some(m) = m {
            marker.get_or_insert_with(|| m.to_string());
        }
        if !token.is_empty() {
            tokens.push((token, classify(token)));
        }
    }

    let locator_idx = tokens
        .iter()
        .rposition(|(_, k)| matches!(k, TokenKind::SeIma(_)));
    let region_end = locator_idx.unwrap_or(tokens.len());
    let slot_idx = tokens[..region_end].iter().rposition(|(_, k)| {
        matches!(
            k,
            TokenKind::Int(_) | TokenKind::NotMeasurable | TokenKind::Dash
        )
    });

    let mut flags = BTreeSet::new();
    let mut current = None;
    let mut historical = Vec::new();
    let description_end = match slot_idx {
        Some(slot) => {
            match tokens[slot].1 {
                TokenKind::Int(v) => current = Some(v),
                TokenKind::NotMeasurable => {
                    flags.insert(RowFlag::NotMeasurable);
                }
                TokenKind::Dash => {
                    flags.insert(RowFlag::Resolved);
                }
                _ => unreachable!(),
            }
            let mut start = slot;
            while start > 0 && is_run_token(tokens[start - 1].1) {
                start -= 1;
            }
            historical.extend(tokens[start..slot].iter().filter_map(|(_, k)| match k {
                TokenKind::Int(v) => Some(*v),
                _ => None,
            }));
            start
        }
        None => region_end,
    };

    let description = tokens[..description_end]
        .iter()
        .map(|(t, _)| *t)
        .collect::<Vec<_>>()
        .join(" ");

    let footnote = marker.map(|m| {
        flags.insert(RowFlag::Footnoted);
        footnotes.get(&m).cloned().unwrap_or(m)
    });

    RowParse {
        description,
        historical_sizes_mm: historical,
        current_size_mm: current,
        se_ima: locator_idx.and_then(|i| match tokens[i].1 {
            TokenKind::SeIma(s) => Some(s),
            _ => None,
        }),
        flags,
        footnote,
    }
}

fn is_run_token(kind: TokenKind) -> bool {
    matches!(
        kind,
        TokenKind::Int(_)
            | TokenKind::NotMeasurable
            | TokenKind::Dash
            | TokenKind::SeIma(_)
            | TokenKind::Unit
    )
}

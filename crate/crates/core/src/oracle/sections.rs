//! Locating RECIST table sections in a report body and stitching wrapped
//! table rows back together.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::row::{classify, strip_footnote_marker, TokenKind};
use super::HeaderLexicon;
use crate::model::LesionCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Lesions(LesionCategory),
    OtherFindings,
}

/// One logical table row. `source_lines` are 1-based body line numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRow {
    pub text: String,
    pub source_lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSection {
    pub kind: SectionKind,
    /// 1-based line number of the header.
    pub header_line: usize,
    pub rows: Vec<RawRow>,
}

/// Section being collected: kind, header line index, (line index, text) rows.
type OpenSection<'a> = (SectionKind, usize, Vec<(usize, &'a str)>);

/// Splits the body into table sections. A section runs from its header to
/// the next blank line or header. Footnote lines, column-header lines and
/// "none" markers inside a section are not rows.
pub fn detect_sections(body: &str, lexicon: &HeaderLexicon) -> Vec<TableSection> {
    let mut sections = Vec::new();
    let mut current: Option<OpenSection<'_>> = None;

    let flush = |current: &mut Option<OpenSection<'_>>, out: &mut Vec<TableSection>| {
        if let Some((kind, header_line, lines)) = current.take() {
            out.push(TableSection {
                kind,
                header_line,
                rows: reassemble_rows(lines),
            });
        }
    };

    for (idx, line) in body.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(kind) = lexicon.classify_header(line) {
            flush(&mut current, &mut sections);
            current = Some((kind, line_no, Vec::new()));
            continue;
        }
        if line.trim().is_empty() {
            flush(&mut current, &mut sections);
            continue;
        }
        if let Some((_, _, lines)) = current.as_mut() {
            if parse_footnote_line(line).is_some()
                || lexicon.is_column_header(line)
                || lexicon.is_empty_marker(line)
            {
                continue;
            }
            lines.push((line_no, line));
        }
    }
    flush(&mut current, &mut sections);
    sections
}

/// Footnote definitions (`* text`, `** text`) anywhere in the body.
pub fn collect_footnotes(body: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for line in body.lines() {
        if let Some((marker, text)) = parse_footnote_line(line) {
            out.entry(marker.to_string())
                .or_insert_with(|| text.to_string());
        }
    }
    out
}

fn parse_footnote_line(line: &str) -> Option<(&str, &str)> {
    let trimmed = line.trim_start();
    let stars = trimmed.len() - trimmed.trim_start_matches('*').len();
    if stars == 0 {
        return None;
    }
    let text = trimmed[stars..].trim();
    if text.is_empty() {
        return None;
    }
    Some((&trimmed[..stars], text))
}

/// Joins physical lines into logical rows.
///
/// A row is complete once its last token is a series-image locator, a dash
/// marker or a not-measurable marker. Lines following an incomplete row are
/// appended to it, as are lines that start with a measurement-like token
/// (a new row always starts with its description).
pub fn reassemble_rows<'a>(lines: impl IntoIterator<Item = (usize, &'a str)>) -> Vec<RawRow> {
    let mut rows: Vec<RawRow> = Vec::new();
    let mut open = false;
    for (line_no, line) in lines {
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let continues = match rows.last() {
            Some(_) if open => true,
            Some(_) => starts_with_measurement(text),
            None => false,
        };
        if continues {
            let row = rows.last_mut().expect("checked above");
            row.text.push(' ');
            row.text.push_str(text);
            row.source_lines.push(line_no);
        } else {
            rows.push(RawRow {
                text: text.to_string(),
                source_lines: vec![line_no],
            });
        }
        open = !ends_with_terminator(&rows.last().expect("just pushed").text);
    }
    rows
}

/// Convenience form numbering lines from 1.
pub fn reassemble_lines<S: AsRef<str>>(lines: &[S]) -> Vec<RawRow> {
    reassemble_rows(lines.iter().enumerate().map(|(i, l)| (i + 1, l.as_ref())))
}

fn ends_with_terminator(text: &str) -> bool {
    text.split_whitespace()
        .last()
        .map(|t| {
            matches!(
                classify(strip_footnote_marker(t).0),
                TokenKind::SeIma(_) | TokenKind::Dash | TokenKind::NotMeasurable
            )
        })
        .unwrap_or(false)
}

fn starts_with_measurement(text: &str) -> bool {
    text.split_whitespace()
        .next()
        .map(|t| {
            matches!(
                classify(strip_footnote_marker(t).0),
                TokenKind::SeIma(_)
                    | TokenKind::Int(_)
                    | TokenKind::Dash
                    | TokenKind::NotMeasurable
                    | TokenKind::Unit
            )
        })
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapped_row_is_rejoined_past_first_segment() {
        let rows = reassemble_lines(&["Lever segment 2 23 18", "15 4-120"]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].text, "Lever segment 2 23 18 15 4-120");
        assert_eq!(rows[0].source_lines, vec![1, 2]);
    }

    #[test]
    fn complete_rows_stay_separate() {
        let rows = reassemble_lines(&[
            "Milt laesie 12 9 2-88",
            "Longnodule rechts --",
            "Klier nm 2-45",
        ]);
        let texts: Vec<_> = rows.iter().map(|r| r.text.as_str()).collect();
        assert_eq!(
            texts,
            [
                "Milt laesie 12 9 2-88",
                "Longnodule rechts --",
                "Klier nm 2-45"
            ]
        );
    }

    #[test]
    fn wrap_after_terminator_like_token_still_joins() {
        let rows = reassemble_lines(&[
            "Klier mediastinaal nm",
            "2-45",
            "Lever 28 3-100",
            "19 3-112",
        ]);
        let texts: Vec<_> = rows.iter().map(|r| r.text.as_str()).collect();
        assert_eq!(
            texts,
            ["Klier mediastinaal nm 2-45", "Lever 28 3-100 19 3-112"]
        );
    }

    #[test]
    fn unterminated_trailing_row_ends_at_section_end() {
        let rows = reassemble_lines(&["Lever 12 3-4", "nieuwe laesie lever, niet meetbaar"]);
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn sections_from_headers() {
        let body = "CT thorax\n\nTarget laesies:\nLever 12 3-4\n\nNon-target laesies:\nMilt 2-5\n\nNieuwe laesies:\nGeen.\n\nConclusie: stabiel.\n";
        let s = detect_sections(body, &HeaderLexicon::default());
        let kinds: Vec<_> = s.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [
                SectionKind::Lesions(LesionCategory::Target),
                SectionKind::Lesions(LesionCategory::NonTarget),
                SectionKind::Lesions(LesionCategory::New)
            ]
        );
        assert_eq!(s[0].header_line, 3);
        assert_eq!(s[0].rows[0].source_lines, vec![4]);
        assert!(s[2].rows.is_empty());
    }

    #[test]
    fn no_headers_no_sections() {
        assert!(detect_sections(
            "Geen afwijkingen.\nConclusie: normaal.",
            &HeaderLexicon::default()
        )
        .is_empty());
    }

    #[test]
    fn other_findings_section() {
        let s = detect_sections(
            "Overige bevindingen:\nGalstenen 2-14\n",
            &HeaderLexicon::default(),
        );
        assert_eq!(s[0].kind, SectionKind::OtherFindings);
    }

    #[test]
    fn footnotes_and_column_headers_are_not_rows() {
        let body = "Target laesies:\nLocatie Vorige Huidig SE-IMA\nLever laesie* 30 25 5-10\n* moeilijk meetbaar\n";
        let s = detect_sections(body, &HeaderLexicon::default());
        assert_eq!(s[0].rows.len(), 1);
        assert_eq!(
            collect_footnotes(body).get("*").map(String::as_str),
            Some("moeilijk meetbaar")
        );
    }
}

//! Article records and paragraph segmentation.
//!
//! Input is one JSON object per line carrying `article_id` and either a
//! `body_text` string (split on blank lines) or a pre-segmented `paragraphs`
//! array. Malformed lines are reported and skipped; a duplicate `article_id`
//! is the only fatal condition.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize_text;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("duplicate article_id {article_id:?} on lines {first_line} and {second_line}")]
    DuplicateArticle {
        article_id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("read error on line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

/// The retrieval unit: one normalized paragraph of an article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "ParagraphLine", into = "ParagraphLine")]
pub struct Paragraph {
    pub paragraph_id: String,
    pub article_id: String,
    pub text: String,
    pub char_count: usize,
}

#[derive(Serialize, Deserialize)]
struct ParagraphLine {
    paragraph_id: String,
    article_id: String,
    text: String,
}

impl From<ParagraphLine> for Paragraph {
    fn from(l: ParagraphLine) -> Self {
        Paragraph::new(l.paragraph_id, l.article_id, l.text)
    }
}

impl From<Paragraph> for ParagraphLine {
    fn from(p: Paragraph) -> Self {
        ParagraphLine {
            paragraph_id: p.paragraph_id,
            article_id: p.article_id,
            text: p.text,
        }
    }
}

impl Paragraph {
    pub fn new(paragraph_id: String, article_id: String, text: String) -> Self {
        let char_count = text.chars().count();
        Paragraph {
            paragraph_id,
            article_id,
            text,
            char_count,
        }
    }
}

pub fn paragraph_id(article_id: &str, ordinal: usize) -> String {
    format!("{article_id}#{ordinal}")
}

/// Article-level metadata, without paragraph bodies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleMeta {
    pub article_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub venue: String,
    #[serde(default)]
    pub year: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleRecord {
    pub article_id: String,
    pub title: String,
    pub venue: String,
    pub year: Option<i64>,
    pub paragraphs: Vec<Paragraph>,
}

impl ArticleRecord {
    pub fn meta(&self) -> ArticleMeta {
        ArticleMeta {
            article_id: self.article_id.clone(),
            title: self.title.clone(),
            venue: self.venue.clone(),
            year: self.year,
        }
    }

    /// The record in pre-segmented input form; re-ingesting it yields `self`.
    pub fn to_input_line(&self) -> String {
        let rec = InputRecord {
            article_id: Some(self.article_id.clone()),
            title: Some(self.title.clone()),
            venue: Some(self.venue.clone()),
            year: self.year,
            body_text: None,
            paragraphs: Some(self.paragraphs.iter().map(|p| p.text.clone()).collect()),
        };
        serde_json::to_string(&rec).expect("input record serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InputRecord {
    article_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    venue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    year: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    paragraphs: Option<Vec<String>>,
}

/// One skipped input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestIssue {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub issues: Vec<IngestIssue>,
}

impl IngestReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for issue in &self.issues {
            serde_json::to_writer(&mut w, issue)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Splits on blank lines; each segment is normalized and empty ones dropped.
pub fn segment_paragraphs(full_text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut block = String::new();
    for line in full_text.lines() {
        if line.trim().is_empty() {
            flush_block(&mut block, &mut out);
        } else {
            block.push_str(line);
            block.push('\n');
        }
    }
    flush_block(&mut block, &mut out);
    out
}

fn flush_block(block: &mut String, out: &mut Vec<String>) {
    let seg = normalize_text(block);
    if !seg.is_empty() {
        out.push(seg);
    }
    block.clear();
}

/// Parses one input line (1-based `line` for diagnostics) into a record.
fn parse_line(raw: &str) -> Result<ArticleRecord, String> {
    let rec: InputRecord = serde_json::from_str(raw).map_err(|e| format!("invalid JSON: {e}"))?;
    let article_id = match rec.article_id {
        Some(id) if !id.trim().is_empty() => id,
        Some(_) => return Err("empty article_id".into()),
        None => return Err("missing article_id".into()),
    };
    let texts = match (rec.paragraphs, rec.body_text) {
        (Some(paras), _) => paras
            .iter()
            .map(|p| normalize_text(p))
            .filter(|p| !p.is_empty())
            .collect::<Vec<_>>(),
        (None, Some(body)) => segment_paragraphs(&body),
        (None, None) => return Err("record has neither body_text nor paragraphs".into()),
    };
    let paragraphs = texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| Paragraph::new(paragraph_id(&article_id, i), article_id.clone(), text))
        .collect();
    Ok(ArticleRecord {
        article_id,
        title: rec.title.map(|t| normalize_text(&t)).unwrap_or_default(),
        venue: rec.venue.map(|v| normalize_text(&v)).unwrap_or_default(),
        year: rec.year,
        paragraphs,
    })
}

/// Reads line-delimited article records. Blank lines are ignored.
pub fn ingest_corpus<R: BufRead>(source: R) -> Result<(Vec<ArticleRecord>, IngestReport), IngestError> {
    let mut records = Vec::new();
    let mut report = IngestReport::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io { line: line_no, source })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(rec) => {
                if let Some(&first_line) = seen.get(&rec.article_id) {
                    return Err(IngestError::DuplicateArticle {
                        article_id: rec.article_id,
                        first_line,
                        second_line: line_no,
                    });
                }
                seen.insert(rec.article_id.clone(), line_no);
                records.push(rec);
            }
            Err(reason) => report.issues.push(IngestIssue { line: line_no, reason }),
        }
    }
    Ok((records, report))
}

/// Canonical `paragraphs.jsonl` serialization of a corpus.
pub fn write_paragraphs<'a, W, I>(mut w: W, paragraphs: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Paragraph>,
{
    for p in paragraphs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Error)]
#[error("{path}:{line}: {message}")]
pub struct JsonlError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

/// Reads a JSONL file of `T`, failing on the first bad line.
pub fn read_jsonl<T, R>(source: R, path: &str) -> Result<Vec<T>, JsonlError>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let err = |message: String| JsonlError {
            path: path.to_string(),
            line: idx + 1,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest_str(s: &str) -> (Vec<ArticleRecord>, IngestReport) {
        ingest_corpus(s.as_bytes()).unwrap()
    }

    #[test]
    fn segments_on_blank_lines() {
        assert_eq!(segment_paragraphs("a\n\nb\n\n\nc"), vec!["a", "b", "c"]);
        assert!(segment_paragraphs("   ").is_empty());
        assert!(segment_paragraphs("").is_empty());
        assert_eq!(segment_paragraphs("one\nline  two\n \t\nthree"), vec!["one line two", "three"]);
    }

    #[test]
    fn ten_kib_text_with_seven_separators() {
        let block = "The precursors were mixed and ground. ".repeat(34);
        let blocks: Vec<String> = (0..8).map(|i| format!("{i} {block}")).collect();
        let text = blocks.join("\n\n");
        assert!(text.len() >= 10 * 1024);
        assert_eq!(text.matches("\n\n").count(), 7);
        assert_eq!(segment_paragraphs(&text).len(), 8);
    }

    #[test]
    fn body_text_yields_ordinal_ids() {
        let (recs, report) = ingest_str(r#"{"article_id":"A1","body_text":"x\n\ny\n\nz"}"#);
        assert!(report.is_empty());
        let ids: Vec<_> = recs[0].paragraphs.iter().map(|p| p.paragraph_id.as_str()).collect();
        assert_eq!(ids, ["A1#0", "A1#1", "A1#2"]);
    }

    #[test]
    fn paragraph_arrays_skip_segmentation() {
        let (recs, _) = ingest_str(r#"{"article_id":"B","paragraphs":["p one\n\nstill one","  ","p two"],"year":2019}"#);
        let texts: Vec<_> = recs[0].paragraphs.iter().map(|p| p.text.as_str()).collect();
        assert_eq!(texts, ["p one still one", "p two"]);
        assert_eq!(recs[0].paragraphs[1].paragraph_id, "B#1");
        assert_eq!(recs[0].year, Some(2019));
    }

    #[test]
    fn empty_stream() {
        let (recs, report) = ingest_str("");
        assert!(recs.is_empty());
        assert!(report.is_empty());
    }

    #[test]
    fn malformed_line_is_reported_and_skipped() {
        let input = [
            r#"{"article_id":"A1","body_text":"a"}"#,
            r#"{"article_id":"A2","body_text":"b"}"#,
            r#"{"article_id": "#,
            r#"{"article_id":"A4","paragraphs":["d"]}"#,
            r#"{"article_id":"A5","body_text":"e"}"#,
        ]
        .join("\n");
        let (recs, report) = ingest_str(&input);
        assert_eq!(recs.len(), 4);
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].line, 3);
    }

    #[test]
    fn structural_problems_are_reported() {
        let input = [
            r#"{"body_text":"a"}"#,
            r#"{"article_id":"","body_text":"a"}"#,
            r#"{"article_id":"X"}"#,
            r#"[1,2]"#,
        ]
        .join("\n");
        let (recs, report) = ingest_str(&input);
        assert!(recs.is_empty());
        let lines: Vec<_> = report.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, [1, 2, 3, 4]);
        assert_eq!(report.issues[2].reason, "record has neither body_text nor paragraphs");
    }

    #[test]
    fn duplicate_article_names_both_lines() {
        let input = r#"{"article_id":"A","body_text":"a"}
{"article_id":"B","body_text":"b"}
{"article_id":"A","body_text":"c"}"#;
        match ingest_corpus(input.as_bytes()) {
            Err(IngestError::DuplicateArticle {
                article_id,
                first_line,
                second_line,
            }) => {
                assert_eq!(article_id, "A");
                assert_eq!((first_line, second_line), (1, 3));
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn celsius_is_canonicalized_at_ingest() {
        let (recs, _) = ingest_str(r#"{"article_id":"T","body_text":"heated to 700℃ and 800 ° C"}"#);
        assert_eq!(recs[0].paragraphs[0].text, "heated to 700°C and 800 °C");
    }

    #[test]
    fn report_serializes_one_issue_per_line() {
        let (_, report) = ingest_str("nope\n{}");
        let mut buf = Vec::new();
        report.write_jsonl(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 2);
        assert!(s.starts_with(r#"{"line":1,"#));
    }
}

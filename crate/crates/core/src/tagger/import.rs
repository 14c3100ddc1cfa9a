//! Import of externally produced mention predictions.
//!
//! Each line is either a span record (the `mentions.jsonl` shape) or a BIO
//! record carrying token offsets and one tag per token. BIO records are
//! converted to spans on read. Every resulting span is checked against its
//! paragraph; failures are reported and skipped. Overlaps are allowed.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{normalize_value, EntityCategory, EntityMention};
use crate::ingest::Paragraph;
use crate::text::char_slice;

pub trait ParagraphLookup {
    fn paragraph_text(&self, paragraph_id: &str) -> Option<&str>;
}

impl ParagraphLookup for HashMap<String, Paragraph> {
    fn paragraph_text(&self, id: &str) -> Option<&str> {
        self.get(id).map(|p| p.text.as_str())
    }
}

impl ParagraphLookup for BTreeMap<String, Paragraph> {
    fn paragraph_text(&self, id: &str) -> Option<&str> {
        self.get(id).map(|p| p.text.as_str())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ImportRecord {
    Span {
        paragraph_id: String,
        start: usize,
        end: usize,
        category: String,
        surface: String,
    },
    Bio {
        paragraph_id: String,
        tokens: Vec<(usize, usize)>,
        tags: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportRejection {
    pub line: usize,
    pub paragraph_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportReport {
    pub accepted: usize,
    pub rejections: Vec<ImportRejection>,
}

impl ImportReport {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.rejections {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

struct RawSpan {
    start: usize,
    end: usize,
    category: String,
    surface: Option<String>,
}

/// Checks one span against the paragraph text and builds the mention.
pub fn validate_span<L: ParagraphLookup>(
    corpus: &L,
    paragraph_id: &str,
    start: usize,
    end: usize,
    category: &str,
    surface: Option<&str>,
) -> Result<EntityMention, String> {
    let text = corpus
        .paragraph_text(paragraph_id)
        .ok_or_else(|| "unknown paragraph".to_string())?;
    let category = EntityCategory::resolve(category).map_err(|_| format!("unknown category {category:?}"))?;
    if start >= end {
        return Err("empty span".into());
    }
    let slice = char_slice(text, start, end).ok_or_else(|| "span out of range".to_string())?;
    if let Some(s) = surface {
        if s != slice {
            return Err("surface mismatch".into());
        }
    }
    Ok(EntityMention {
        paragraph_id: paragraph_id.to_string(),
        start,
        end,
        category,
        surface: slice.to_string(),
        normalized: normalize_value(slice, category),
    })
}

/// Converts BIO tags over token offsets into spans.
fn bio_to_spans(tokens: &[(usize, usize)], tags: &[String]) -> Result<Vec<RawSpan>, String> {
    if tokens.len() != tags.len() {
        return Err(format!("{} tokens but {} tags", tokens.len(), tags.len()));
    }
    let mut spans: Vec<RawSpan> = Vec::new();
    let mut open = false;
    for (&(ts, te), tag) in tokens.iter().zip(tags) {
        if tag == "O" {
            open = false;
            continue;
        }
        let (prefix, label) = tag
            .split_once('-')
            .ok_or_else(|| format!("malformed BIO tag {tag:?}"))?;
        match prefix {
            "I" if open && spans.last().is_some_and(|s| s.category == label) => {
                if let Some(last) = spans.last_mut() {
                    last.end = te;
                }
            }
            // a stray I- opens a new span, as most decoders do
            "B" | "I" => {
                spans.push(RawSpan {
                    start: ts,
                    end: te,
                    category: label.to_string(),
                    surface: None,
                });
                open = true;
            }
            _ => return Err(format!("malformed BIO tag {tag:?}")),
        }
    }
    Ok(spans)
}

pub fn import_mentions<R: BufRead, L: ParagraphLookup>(source: R, corpus: &L) -> (Vec<EntityMention>, ImportReport) {
    let mut out = Vec::new();
    let mut report = ImportReport::default();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let reject = |pid: Option<&str>, reason: String| ImportRejection {
            line: line_no,
            paragraph_id: pid.map(str::to_string),
            reason,
        };
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                report.rejections.push(reject(None, format!("read error: {e}")));
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let (pid, spans) = match serde_json::from_str::<ImportRecord>(&line) {
            Ok(ImportRecord::Span {
                paragraph_id,
                start,
                end,
                category,
                surface,
            }) => (
                paragraph_id,
                vec![RawSpan {
                    start,
                    end,
                    category,
                    surface: Some(surface),
                }],
            ),
            Ok(ImportRecord::Bio {
                paragraph_id,
                tokens,
                tags,
            }) => match bio_to_spans(&tokens, &tags) {
                Ok(spans) => (paragraph_id, spans),
                Err(reason) => {
                    report.rejections.push(reject(Some(&paragraph_id), reason));
                    continue;
                }
            },
            Err(e) => {
                report.rejections.push(reject(None, format!("malformed record: {e}")));
                continue;
            }
        };
        for s in spans {
            match validate_span(corpus, &pid, s.start, s.end, &s.category, s.surface.as_deref()) {
                Ok(m) => out.push(m),
                Err(reason) => report.rejections.push(reject(Some(&pid), reason)),
            }
        }
    }
    report.accepted = out.len();
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> HashMap<String, Paragraph> {
        let p = Paragraph::new("A#0".into(), "A".into(), "Co3O4 was heated at 700°C in a tube furnace".into());
        HashMap::from([(p.paragraph_id.clone(), p)])
    }

    fn run(lines: &[&str]) -> (Vec<EntityMention>, ImportReport) {
        import_mentions(lines.join("\n").as_bytes(), &corpus())
    }

    #[test]
    fn valid_record_accepted_and_normalized() {
        let (m, r) = run(&[r#"{"paragraph_id":"A#0","start":20,"end":25,"category":"Material_temperature","surface":"700°C","normalized":"junk"}"#]);
        assert!(r.rejections.is_empty());
        assert_eq!(m[0].category, EntityCategory::PropertyTemperature);
        assert_eq!(m[0].normalized, "700 °C");
    }

    #[test]
    fn rejection_reasons() {
        let (m, r) = run(&[
            r#"{"paragraph_id":"A#0","start":0,"end":5,"category":"Material-recipe","surface":"Co3O5"}"#,
            r#"{"paragraph_id":"A#0","start":40,"end":60,"category":"Device","surface":"x"}"#,
            r#"{"paragraph_id":"B#0","start":0,"end":1,"category":"Device","surface":"x"}"#,
            r#"{"paragraph_id":"A#0","start":0,"end":5,"category":"Colour","surface":"Co3O4"}"#,
            r#"{"paragraph_id":"A#0","start":3,"end":3,"category":"Device","surface":""}"#,
            r#"not json"#,
        ]);
        assert!(m.is_empty());
        let reasons: Vec<_> = r.rejections.iter().map(|x| x.reason.as_str()).collect();
        assert_eq!(reasons[0], "surface mismatch");
        assert_eq!(reasons[1], "span out of range");
        assert_eq!(reasons[2], "unknown paragraph");
        assert!(reasons[3].starts_with("unknown category"));
        assert_eq!(reasons[4], "empty span");
        assert!(reasons[5].starts_with("malformed record"));
        let lines: Vec<_> = r.rejections.iter().map(|x| x.line).collect();
        assert_eq!(lines, [1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn overlaps_are_permitted() {
        let (m, r) = run(&[
            r#"{"paragraph_id":"A#0","start":31,"end":43,"category":"Device","surface":"tube furnace"}"#,
            r#"{"paragraph_id":"A#0","start":36,"end":43,"category":"Device","surface":"furnace"}"#,
        ]);
        assert!(r.rejections.is_empty(), "{:?}", r.rejections);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn bio_records_convert_to_spans() {
        let rec = r#"{"paragraph_id":"A#0","tokens":[[0,5],[6,9],[10,16],[31,35],[36,43]],"tags":["B-Material-recipe","O","B-Operation","B-Device","I-Device"]}"#;
        let (m, r) = run(&[rec]);
        assert!(r.rejections.is_empty(), "{:?}", r.rejections);
        let got: Vec<_> = m.iter().map(|m| (m.category, m.surface.as_str())).collect();
        assert_eq!(
            got,
            [
                (EntityCategory::MaterialRecipe, "Co3O4"),
                (EntityCategory::Operation, "heated"),
                (EntityCategory::Device, "tube furnace"),
            ]
        );
    }

    #[test]
    fn bad_bio_is_reported() {
        let (_, r) = run(&[r#"{"paragraph_id":"A#0","tokens":[[0,5]],"tags":["X-Device"]}"#]);
        assert!(r.rejections[0].reason.contains("malformed BIO tag"));
        let (_, r) = run(&[r#"{"paragraph_id":"A#0","tokens":[[0,5]],"tags":[]}"#]);
        assert_eq!(r.rejections[0].reason, "1 tokens but 0 tags");
    }
}

//! Knowledge-base persistence and per-category statistics.
//!
//! A KB directory holds `paragraphs.jsonl`, `mentions.jsonl`,
//! `articles.jsonl` and `manifest.json`. The manifest records line counts and
//! SHA-256 checksums of the data files and is written last, so a directory
//! without a manifest is never a complete KB.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{read_jsonl, write_paragraphs, ArticleMeta, Paragraph};
use crate::tagger::{EntityCategory, EntityMention};
use crate::text::char_slice;

pub const KB_FORMAT_VERSION: u32 = 1;
pub const PARAGRAPHS_FILE: &str = "paragraphs.jsonl";
pub const MENTIONS_FILE: &str = "mentions.jsonl";
pub const ARTICLES_FILE: &str = "articles.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum KbError {
    #[error("mentions reference unknown paragraphs: {}", .0.join(", "))]
    DanglingMentions(Vec<String>),
    #[error("mention {paragraph_id}[{start},{end}) does not match its paragraph: {reason}")]
    InvalidSpan {
        paragraph_id: String,
        start: usize,
        end: usize,
        reason: String,
    },
    #[error("paragraph {0} appears more than once")]
    DuplicateParagraph(String),
    #[error("no manifest in {0}")]
    MissingManifest(PathBuf),
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(String),
    #[error("{file}: manifest lists {expected} records, found {found}")]
    RecordCount { file: String, expected: u64, found: u64 },
    #[error("unsupported KB format version {0}")]
    Version(u32),
    #[error("manifest does not list required file {0}")]
    MissingFile(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] crate::ingest::JsonlError),
    #[error("invalid manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> KbError + '_ {
    move |source| KbError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub rule_set_version: u32,
    pub tagger_config_hash: String,
    pub ingest_timestamp: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub paragraphs: BTreeMap<String, Paragraph>,
    pub articles: BTreeMap<String, ArticleMeta>,
    /// Kept in canonical order: `(paragraph_id, start, end, category)`.
    pub mentions: Vec<EntityMention>,
    pub provenance: Provenance,
}

impl KnowledgeBase {
    /// Builds and validates a KB. Mentions are put in canonical order.
    pub fn new(
        paragraphs: impl IntoIterator<Item = Paragraph>,
        articles: impl IntoIterator<Item = ArticleMeta>,
        mentions: Vec<EntityMention>,
        provenance: Provenance,
    ) -> Result<Self, KbError> {
        let mut map = BTreeMap::new();
        for p in paragraphs {
            if let Some(prev) = map.insert(p.paragraph_id.clone(), p) {
                return Err(KbError::DuplicateParagraph(prev.paragraph_id));
            }
        }
        let mut kb = KnowledgeBase {
            paragraphs: map,
            articles: articles.into_iter().map(|a| (a.article_id.clone(), a)).collect(),
            mentions,
            provenance,
        };
        kb.sort_mentions();
        kb.validate()?;
        Ok(kb)
    }

    pub fn sort_mentions(&mut self) {
        self.mentions.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }

    /// Referential integrity first, then span validity.
    pub fn validate(&self) -> Result<(), KbError> {
        let mut dangling: Vec<String> = self
            .mentions
            .iter()
            .filter(|m| !self.paragraphs.contains_key(&m.paragraph_id))
            .map(|m| m.paragraph_id.clone())
            .collect();
        if !dangling.is_empty() {
            dangling.sort();
            dangling.dedup();
            return Err(KbError::DanglingMentions(dangling));
        }
        for m in &self.mentions {
            let text = &self.paragraphs[&m.paragraph_id].text;
            let bad = |reason: &str| KbError::InvalidSpan {
                paragraph_id: m.paragraph_id.clone(),
                start: m.start,
                end: m.end,
                reason: reason.to_string(),
            };
            if m.start >= m.end {
                return Err(bad("empty span"));
            }
            match char_slice(text, m.start, m.end) {
                None => return Err(bad("span out of range")),
                Some(s) if s != m.surface => return Err(bad("surface mismatch")),
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn mentions_of<'a>(&'a self, paragraph_id: &'a str) -> impl Iterator<Item = &'a EntityMention> + 'a {
        let lo = self.mentions.partition_point(|m| m.paragraph_id.as_str() < paragraph_id);
        self.mentions[lo..].iter().take_while(move |m| m.paragraph_id == paragraph_id)
    }

    pub fn article_of(&self, paragraph: &Paragraph) -> ArticleMeta {
        self.articles.get(&paragraph.article_id).cloned().unwrap_or_else(|| ArticleMeta {
            article_id: paragraph.article_id.clone(),
            title: String::new(),
            venue: String::new(),
            year: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub records: u64,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub provenance: Provenance,
    pub files: BTreeMap<String, FileEntry>,
}

fn jsonl_bytes<T: Serialize>(items: impl IntoIterator<Item = T>) -> (Vec<u8>, u64) {
    let mut buf = Vec::new();
    let mut n = 0;
    for item in items {
        serde_json::to_writer(&mut buf, &item).expect("record serializes");
        buf.push(b'\n');
        n += 1;
    }
    (buf, n)
}

fn entry_for(bytes: &[u8], records: u64) -> FileEntry {
    FileEntry {
        records,
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), KbError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes the KB in canonical form; the manifest goes last.
pub fn save_kb(kb: &KnowledgeBase, dest: &Path) -> Result<Manifest, KbError> {
    kb.validate()?;
    let mut mentions: Vec<&EntityMention> = kb.mentions.iter().collect();
    mentions.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    let mut paragraphs = Vec::new();
    write_paragraphs(&mut paragraphs, kb.paragraphs.values()).expect("in-memory write");
    let files = [
        (PARAGRAPHS_FILE, paragraphs, kb.paragraphs.len() as u64),
        {
            let (b, n) = jsonl_bytes(mentions);
            (MENTIONS_FILE, b, n)
        },
        {
            let (b, n) = jsonl_bytes(kb.articles.values());
            (ARTICLES_FILE, b, n)
        },
    ];

    fs::create_dir_all(dest).map_err(io_err(dest))?;
    let manifest_path = dest.join(MANIFEST_FILE);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(io_err(&manifest_path))?;
    }
    let mut entries = BTreeMap::new();
    for (name, bytes, records) in &files {
        write_atomic(&dest.join(name), bytes)?;
        entries.insert(name.to_string(), entry_for(bytes, *records));
    }
    let manifest = Manifest {
        format_version: KB_FORMAT_VERSION,
        provenance: kb.provenance.clone(),
        files: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&manifest_path, json.as_bytes())?;
    Ok(manifest)
}

fn read_verified(dir: &Path, manifest: &Manifest, name: &str) -> Result<Option<Vec<u8>>, KbError> {
    let Some(entry) = manifest.files.get(name) else {
        return Ok(None);
    };
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    if bytes.len() as u64 != entry.bytes || hex::encode(Sha256::digest(&bytes)) != entry.sha256 {
        return Err(KbError::ChecksumMismatch(name.to_string()));
    }
    Ok(Some(bytes))
}

fn parse_counted<T: serde::de::DeserializeOwned>(
    bytes: &[u8],
    name: &str,
    manifest: &Manifest,
) -> Result<Vec<T>, KbError> {
    let items: Vec<T> = read_jsonl(bytes, name)?;
    let expected = manifest.files[name].records;
    if items.len() as u64 != expected {
        return Err(KbError::RecordCount {
            file: name.to_string(),
            expected,
            found: items.len() as u64,
        });
    }
    Ok(items)
}

/// Loads and fully revalidates a KB directory.
pub fn load_kb(src: &Path) -> Result<KnowledgeBase, KbError> {
    let manifest_path = src.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(KbError::MissingManifest(src.to_path_buf()));
    }
    let raw = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&raw)?;
    if manifest.format_version != KB_FORMAT_VERSION {
        return Err(KbError::Version(manifest.format_version));
    }
    let required = |name: &str| -> Result<Vec<u8>, KbError> {
        read_verified(src, &manifest, name)?.ok_or_else(|| KbError::MissingFile(name.to_string()))
    };
    let paragraphs: Vec<Paragraph> = parse_counted(&required(PARAGRAPHS_FILE)?, PARAGRAPHS_FILE, &manifest)?;
    let mentions: Vec<EntityMention> = parse_counted(&required(MENTIONS_FILE)?, MENTIONS_FILE, &manifest)?;
    let articles: Vec<ArticleMeta> = match read_verified(src, &manifest, ARTICLES_FILE)? {
        Some(bytes) => parse_counted(&bytes, ARTICLES_FILE, &manifest)?,
        None => Vec::new(),
    };
    KnowledgeBase::new(paragraphs, articles, mentions, manifest.provenance)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueFrequency {
    pub value: String,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub category: EntityCategory,
    pub count: u64,
    pub unique_count: u64,
    pub top_examples: Vec<ValueFrequency>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsTotals {
    pub count: u64,
    pub unique_count: u64,
}

/// Per-category mention counts. Uniqueness is over normalized values, and
/// the total unique count is the number of distinct (category, value) keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub unique_basis: String,
    pub rows: Vec<StatsRow>,
    pub totals: StatsTotals,
}

pub const DEFAULT_TOP_EXAMPLES: usize = 4;

pub fn compute_stats(kb: &KnowledgeBase, top: usize) -> StatsReport {
    stats_from_mentions(&kb.mentions, top)
}

pub fn stats_from_mentions(mentions: &[EntityMention], top: usize) -> StatsReport {
    let mut freq: Vec<HashMap<&str, u64>> = vec![HashMap::new(); EntityCategory::COUNT];
    for m in mentions {
        *freq[m.category.index()].entry(m.normalized.as_str()).or_default() += 1;
    }
    let rows: Vec<StatsRow> = EntityCategory::ALL
        .into_iter()
        .map(|category| {
            let values = &freq[category.index()];
            let mut ranked: Vec<(&str, u64)> = values.iter().map(|(v, n)| (*v, *n)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            StatsRow {
                category,
                count: values.values().sum(),
                unique_count: values.len() as u64,
                top_examples: ranked
                    .into_iter()
                    .take(top)
                    .map(|(v, n)| ValueFrequency {
                        value: v.to_string(),
                        frequency: n,
                    })
                    .collect(),
            }
        })
        .collect();
    let totals = StatsTotals {
        count: rows.iter().map(|r| r.count).sum(),
        unique_count: rows.iter().map(|r| r.unique_count).sum(),
    };
    StatsReport {
        unique_basis: "normalized".into(),
        rows,
        totals,
    }
}

impl StatsReport {
    pub fn row(&self, category: EntityCategory) -> &StatsRow {
        &self.rows[category.index()]
    }

    /// Canonical machine-readable form, shared by the CLI and the HTTP API.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("stats serialize");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let fmt_n = |n: u64| {
            let digits = n.to_string();
            let mut out = String::new();
            for (i, c) in digits.chars().enumerate() {
                if i > 0 && (digits.len() - i).is_multiple_of(3) {
                    out.push(',');
                }
                out.push(c);
            }
            out
        };
        let mut lines: Vec<[String; 4]> = vec![["Name".into(), "#Count".into(), "#Unique".into(), "Examples".into()]];
        for r in &self.rows {
            let examples = r.top_examples.iter().map(|e| e.value.as_str()).collect::<Vec<_>>().join(", ");
            lines.push([r.category.to_string(), fmt_n(r.count), fmt_n(r.unique_count), examples]);
        }
        let total = ["Total".into(), fmt_n(self.totals.count), fmt_n(self.totals.unique_count), String::new()];
        let mut widths = [0usize; 4];
        for l in lines.iter().chain(std::iter::once(&total)) {
            for (w, cell) in widths.iter_mut().zip(l) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let rule = widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-");
        let render = |l: &[String; 4]| {
            let mut s = String::new();
            let _ = write!(
                s,
                "{:<w0$} | {:>w1$} | {:>w2$} | {}",
                l[0],
                l[1],
                l[2],
                l[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            );
            s.trim_end().to_string()
        };
        let mut out = format!("# unique counts are over {} values\n", self.unique_basis);
        out.push_str(&render(&lines[0]));
        out.push('\n');
        out.push_str(&rule);
        out.push('\n');
        for l in &lines[1..] {
            out.push_str(&render(l));
            out.push('\n');
        }
        out.push_str(&rule);
        out.push('\n');
        out.push_str(&render(&total));
        out.push('\n');
        out
    }
}

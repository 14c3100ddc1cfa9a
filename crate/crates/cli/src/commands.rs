use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use matkb_core::filter::{eval_recall as recall_of, CompiledFilter, FilterRuleSet, RULES_VERSION};
use matkb_core::index::{build_index, parse_query, persist};
use matkb_core::ingest::{ingest_corpus, read_jsonl, write_paragraphs, ArticleMeta};
use matkb_core::kb::{compute_stats, load_kb, save_kb, Provenance};
use matkb_core::tagger::eval::eval_span_f1;
use matkb_core::tagger::import::import_mentions as import;
use matkb_core::tagger::{tag_corpus, EntityCategory, EntityMention, Lexicon, TaggerConfig};
use matkb_core::{ExactSpanScores, FilterDecision, KnowledgeBase, Paragraph, SpanF1Report};

use crate::QueryFormat;

pub const RULES_FILE: &str = "filter_rules.v1.json";

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn read_lines_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    Ok(read_jsonl(open(path)?, &path.display().to_string())?)
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn load_rules(path: Option<&Path>) -> Result<FilterRuleSet> {
    match path {
        None => Ok(FilterRuleSet::default()),
        Some(p) => {
            let src = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            FilterRuleSet::from_json(&src).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn load_config(dir: Option<&Path>) -> Result<TaggerConfig> {
    match dir {
        None => Ok(TaggerConfig::builtin()),
        Some(d) => TaggerConfig::from_dir(d).with_context(|| format!("loading lexicons from {}", d.display())),
    }
}

pub fn ingest(input: &Path, out: &Path) -> Result<()> {
    let (records, report) = ingest_corpus(open(input)?)?;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("paragraphs.jsonl"))?;
    write_paragraphs(&mut w, records.iter().flat_map(|r| &r.paragraphs))?;
    w.flush()?;
    write_jsonl(&out.join("articles.jsonl"), records.iter().map(|r| r.meta()))?;
    let mut w = create(&out.join("ingest_report.jsonl"))?;
    report.write_jsonl(&mut w)?;
    w.flush()?;
    let n: usize = records.iter().map(|r| r.paragraphs.len()).sum();
    tracing::info!(articles = records.len(), paragraphs = n, skipped_lines = report.issues.len(), "ingested");
    Ok(())
}

pub fn filter(corpus: &Path, rules: Option<&Path>, out: &Path) -> Result<()> {
    let paragraphs: Vec<Paragraph> = read_lines_jsonl(corpus)?;
    let filter = CompiledFilter::new(load_rules(rules)?);
    let decisions: Vec<FilterDecision> = paragraphs.iter().map(|p| filter.apply(p)).collect();
    fs::create_dir_all(out)?;
    write_jsonl(&out.join("filter_decisions.jsonl"), &decisions)?;
    let mut w = create(&out.join("paragraphs.jsonl"))?;
    write_paragraphs(&mut w, paragraphs.iter().zip(&decisions).filter(|(_, d)| d.kept).map(|(p, _)| p))?;
    w.flush()?;
    let kept = decisions.iter().filter(|d| d.kept).count();
    tracing::info!(paragraphs = paragraphs.len(), kept, "filtered");
    Ok(())
}

/// Gold ids, one per line; blank lines and `#` comments are ignored.
fn read_gold_ids(path: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for line in open(path)?.lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() && !id.starts_with('#') {
            ids.push(id.to_string());
        }
    }
    Ok(ids)
}

pub fn eval_recall(decisions: &Path, gold: &Path, json: bool) -> Result<()> {
    let decisions: Vec<FilterDecision> = read_lines_jsonl(decisions)?;
    let gold = read_gold_ids(gold)?;
    let report = recall_of(&decisions, gold.iter().map(String::as_str))?;
    if json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        println!("{report}");
    }
    Ok(())
}

pub fn tag(corpus: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let paragraphs: Vec<Paragraph> = read_lines_jsonl(corpus)?;
    let config = load_config(config)?;
    let mentions = tag_corpus(&paragraphs, &config);
    write_jsonl(out, &mentions)?;
    tracing::info!(paragraphs = paragraphs.len(), mentions = mentions.len(), "tagged");
    Ok(())
}

pub fn import_mentions(input: &Path, corpus: &Path, out: &Path, report: Option<&Path>) -> Result<()> {
    let paragraphs: Vec<Paragraph> = read_lines_jsonl(corpus)?;
    let lookup: BTreeMap<String, Paragraph> = paragraphs.into_iter().map(|p| (p.paragraph_id.clone(), p)).collect();
    let (mentions, rep) = import(open(input)?, &lookup);
    write_jsonl(out, &mentions)?;
    let report_path = report.map(Path::to_path_buf).unwrap_or_else(|| {
        out.parent().unwrap_or(Path::new(".")).join("import_report.jsonl")
    });
    let mut w = create(&report_path)?;
    rep.write_jsonl(&mut w)?;
    w.flush()?;
    println!("accepted {} rejected {}", rep.accepted, rep.rejections.len());
    Ok(())
}

/// Mention files for evaluation only need the span key; surface and
/// normalized value are optional.
#[derive(Deserialize)]
struct SpanLine {
    paragraph_id: String,
    start: usize,
    end: usize,
    category: EntityCategory,
    #[serde(default)]
    surface: String,
    #[serde(default)]
    normalized: String,
}

fn read_spans(path: &Path) -> Result<Vec<EntityMention>> {
    let lines: Vec<SpanLine> = read_lines_jsonl(path)?;
    Ok(lines
        .into_iter()
        .map(|l| EntityMention {
            paragraph_id: l.paragraph_id,
            start: l.start,
            end: l.end,
            category: l.category,
            surface: l.surface,
            normalized: l.normalized,
        })
        .collect())
}

pub fn eval_ner(pred: &Path, gold: &Path, json: bool) -> Result<()> {
    let pred = read_spans(pred)?;
    let gold = read_spans(gold)?;
    let report: SpanF1Report = eval_span_f1(&pred, &gold);
    if json {
        println!("{}", serde_json::to_string(&report)?);
        return Ok(());
    }
    let exact: ExactSpanScores = report.counts.scores();
    let c = report.counts;
    println!(
        "overall P={:.4} R={:.4} F1={:.4} (exact {} {} {}; tp {} pred {} gold {})",
        report.overall.precision,
        report.overall.recall,
        report.overall.f1,
        exact.precision,
        exact.recall,
        exact.f1,
        c.true_positives,
        c.predicted,
        c.gold
    );
    for row in &report.per_category {
        println!(
            "{:<22} P={:.4} R={:.4} F1={:.4} (tp {} pred {} gold {})",
            row.category.as_str(),
            row.scores.precision,
            row.scores.recall,
            row.scores.f1,
            row.counts.true_positives,
            row.counts.predicted,
            row.counts.gold
        );
    }
    Ok(())
}

pub fn init_config(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    for lex in TaggerConfig::builtin().lexicons() {
        let path = out.join(Lexicon::file_name(lex.category));
        fs::write(&path, lex.to_file_string()).with_context(|| format!("writing {}", path.display()))?;
    }
    fs::write(out.join(RULES_FILE), FilterRuleSet::default().to_json())?;
    println!("wrote lexicons and {RULES_FILE} to {}", out.display());
    Ok(())
}

pub struct KbInputs<'a> {
    pub corpus: &'a Path,
    pub mentions: &'a Path,
    pub articles: Option<&'a Path>,
    pub rules: Option<&'a Path>,
    pub config: Option<&'a Path>,
    pub ingest_timestamp: Option<String>,
    pub out: &'a Path,
}

pub fn build_kb(inputs: &KbInputs<'_>) -> Result<()> {
    let paragraphs: Vec<Paragraph> = read_lines_jsonl(inputs.corpus)?;
    let mentions: Vec<EntityMention> = read_lines_jsonl(inputs.mentions)?;
    let articles: Vec<ArticleMeta> = match inputs.articles {
        Some(p) => read_lines_jsonl(p)?,
        None => Vec::new(),
    };
    let provenance = Provenance {
        rule_set_version: match inputs.rules {
            Some(_) => load_rules(inputs.rules)?.version,
            None => RULES_VERSION,
        },
        tagger_config_hash: load_config(inputs.config)?.config_hash(),
        ingest_timestamp: inputs.ingest_timestamp.clone().unwrap_or_else(|| {
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        }),
    };
    // keep only articles that still have paragraphs
    let used: std::collections::BTreeSet<&str> = paragraphs.iter().map(|p| p.article_id.as_str()).collect();
    let articles: Vec<ArticleMeta> = articles.into_iter().filter(|a| used.contains(a.article_id.as_str())).collect();
    let kb = KnowledgeBase::new(paragraphs, articles, mentions, provenance)?;
    let manifest = save_kb(&kb, inputs.out)?;
    tracing::info!(
        paragraphs = kb.paragraphs.len(),
        mentions = kb.mentions.len(),
        files = manifest.files.len(),
        "knowledge base written"
    );
    Ok(())
}

pub fn stats(kb: &Path, top: usize, json: bool, out: Option<&Path>) -> Result<()> {
    let kb = load_kb(kb)?;
    let report = compute_stats(&kb, top);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("stats.json"), report.to_json())?;
        fs::write(dir.join("stats.txt"), report.to_table())?;
    }
    let text = if json { report.to_json() } else { report.to_table() };
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

pub fn index(kb: &Path, out: &Path) -> Result<()> {
    let kb = load_kb(kb)?;
    let idx = build_index(&kb);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    persist::save_index(&idx, out)?;
    tracing::info!(paragraphs = idx.len(), path = %out.display(), "index written");
    Ok(())
}

fn truncate_chars(s: &str, n: usize) -> String {
    match s.char_indices().nth(n) {
        None => s.to_string(),
        Some((i, _)) => format!("{}…", &s[..i]),
    }
}

pub fn query(index: &Path, text: &str, limit: usize, offset: usize, format: QueryFormat) -> Result<()> {
    let idx = persist::load_index(index)?;
    let q = match parse_query(text) {
        Ok(q) => q.page(limit, offset),
        Err(e) => bail!("{text}\n{}^ {e}", " ".repeat(e.column.saturating_sub(1))),
    };
    let page = idx.query(&q)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        QueryFormat::Jsonl => {
            for r in &page.results {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
        }
        QueryFormat::Table => {
            let rows: Vec<[String; 4]> = page
                .results
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    [
                        (offset + i + 1).to_string(),
                        format!("{:.4}", r.score),
                        r.paragraph_id.clone(),
                        truncate_chars(&r.snippet, 80),
                    ]
                })
                .collect();
            let header = ["#".to_string(), "score".into(), "paragraph_id".into(), "snippet".into()];
            let mut w = [0usize; 3];
            for row in std::iter::once(&header).chain(&rows) {
                for (k, cell) in row.iter().take(3).enumerate() {
                    w[k] = w[k].max(cell.chars().count());
                }
            }
            let mut s = String::new();
            writeln!(s, "# {} of {} matches", rows.len(), page.total)?;
            for row in std::iter::once(&header).chain(&rows) {
                writeln!(s, "{:>w0$}  {:>w1$}  {:<w2$}  {}", row[0], row[1], row[2], row[3], w0 = w[0], w1 = w[1], w2 = w[2])?;
            }
            out.write_all(s.as_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn serve(config: matkb_server::ApiConfig) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(matkb_server::run(config))?;
    Ok(())
}

pub fn pipeline(
    input: &Path,
    config: Option<&Path>,
    rules: Option<&Path>,
    ingest_timestamp: Option<String>,
    out: &Path,
) -> Result<()> {
    let ingest_dir = out.join("ingest");
    let filter_dir = out.join("filter");
    let mentions: PathBuf = out.join("mentions.jsonl");
    let kb_dir = out.join("kb");
    ingest(input, &ingest_dir)?;
    filter(&ingest_dir.join("paragraphs.jsonl"), rules, &filter_dir)?;
    tag(&filter_dir.join("paragraphs.jsonl"), config, &mentions)?;
    build_kb(&KbInputs {
        corpus: &filter_dir.join("paragraphs.jsonl"),
        mentions: &mentions,
        articles: Some(&ingest_dir.join("articles.jsonl")),
        rules,
        config,
        ingest_timestamp,
        out: &kb_dir,
    })?;
    index(&kb_dir, &out.join("index.bin"))
}

//! `matkb`: ingest → filter → tag → build-kb → index → query/serve.

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "matkb", version, about = "Materials-synthesis knowledge base: extraction and slot search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum QueryFormat {
    /// One SearchResult JSON object per line
    Jsonl,
    /// Aligned text table
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Parse article records into paragraphs.jsonl, articles.jsonl and ingest_report.jsonl
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep synthesis paragraphs; writes filter_decisions.jsonl and paragraphs.jsonl
    Filter {
        #[arg(long)]
        corpus: PathBuf,
        /// Rule file; the built-in rules when omitted
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recall of filter decisions against gold paragraph ids (one per line)
    EvalRecall {
        #[arg(long)]
        decisions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Tag entity mentions in a paragraph corpus
    Tag {
        #[arg(long)]
        corpus: PathBuf,
        /// Lexicon directory; missing files fall back to the built-in lists
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate externally produced mentions (span or BIO records)
    ImportMentions {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rejection report; defaults to import_report.jsonl next to --out
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Span-level precision/recall/F1 of predicted against gold mentions
    EvalNer {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write the built-in lexicons and filter rules to a directory for editing
    InitConfig {
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble paragraphs and mentions into a checksummed KB directory
    BuildKb {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        mentions: PathBuf,
        /// articles.jsonl from ingest; titles are left blank without it
        #[arg(long)]
        articles: Option<PathBuf>,
        /// Rule file used by the filter, recorded as provenance
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Lexicon directory used by the tagger, recorded as provenance
        #[arg(long)]
        config: Option<PathBuf>,
        /// Recorded as provenance; defaults to the current time
        #[arg(long, env = "MATKB_INGEST_TIMESTAMP")]
        ingest_timestamp: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-category mention statistics
    Stats {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value_t = matkb_core::kb::DEFAULT_TOP_EXAMPLES)]
        top: usize,
        /// Print the machine-readable report instead of the table
        #[arg(long)]
        json: bool,
        /// Also write stats.json and stats.txt into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build index.bin from a KB
    Index {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a slot query, e.g. 'Material_recipe:Co3O4 Material_temperature:"1000 °C"'
    Query {
        #[arg(long)]
        index: PathBuf,
        query: String,
        #[arg(long, default_value_t = matkb_core::index::query::DEFAULT_LIMIT)]
        limit: usize,
        #[arg(long, default_value_t = 0)]
        offset: usize,
        #[arg(long, value_enum, default_value_t = QueryFormat::Jsonl)]
        format: QueryFormat,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long, env = "MATKB_INDEX")]
        index: PathBuf,
        #[arg(long, env = "MATKB_KB")]
        kb: PathBuf,
        #[arg(long, env = "MATKB_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long, env = "MATKB_MAX_PAGE_SIZE", default_value_t = matkb_server::DEFAULT_MAX_PAGE_SIZE)]
        max_page_size: usize,
        /// Allowed CORS origin (repeatable, or comma-separated in the env var); `*` allows any
        #[arg(long = "cors-origin", env = "MATKB_CORS_ORIGINS", value_delimiter = ',')]
        cors_origins: Vec<String>,
    },
    /// Run ingest, filter, tag, build-kb and index in one go
    Pipeline {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, env = "MATKB_INGEST_TIMESTAMP")]
        ingest_timestamp: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("MATKB_LOG").unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest { input, out } => commands::ingest(&input, &out),
        Command::Filter { corpus, rules, out } => commands::filter(&corpus, rules.as_deref(), &out),
        Command::EvalRecall { decisions, gold, json } => commands::eval_recall(&decisions, &gold, json),
        Command::Tag { corpus, config, out } => commands::tag(&corpus, config.as_deref(), &out),
        Command::ImportMentions {
            input,
            corpus,
            out,
            report,
        } => commands::import_mentions(&input, &corpus, &out, report.as_deref()),
        Command::EvalNer { pred, gold, json } => commands::eval_ner(&pred, &gold, json),
        Command::InitConfig { out } => commands::init_config(&out),
        Command::BuildKb {
            corpus,
            mentions,
            articles,
            rules,
            config,
            ingest_timestamp,
            out,
        } => commands::build_kb(&commands::KbInputs {
            corpus: &corpus,
            mentions: &mentions,
            articles: articles.as_deref(),
            rules: rules.as_deref(),
            config: config.as_deref(),
            ingest_timestamp,
            out: &out,
        }),
        Command::Stats { kb, top, json, out } => commands::stats(&kb, top, json, out.as_deref()),
        Command::Index { kb, out } => commands::index(&kb, &out),
        Command::Query {
            index,
            query,
            limit,
            offset,
            format,
        } => commands::query(&index, &query, limit, offset, format),
        Command::Serve {
            index,
            kb,
            bind,
            max_page_size,
            cors_origins,
        } => commands::serve(matkb_server::ApiConfig {
            bind,
            index_path: index,
            kb_path: kb,
            max_page_size,
            cors_origins,
        }),
        Command::Pipeline {
            input,
            config,
            rules,
            ingest_timestamp,
            out,
        } => commands::pipeline(&input, config.as_deref(), rules.as_deref(), ingest_timestamp, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

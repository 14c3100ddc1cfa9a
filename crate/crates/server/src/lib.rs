//! Read-only HTTP JSON API over a loaded index and knowledge base.
//!
//! | route                     | response                                   |
//! |---------------------------|--------------------------------------------|
//! | `GET /api/slots`          | the 13 slots with aliases and value counts |
//! | `GET /api/search?q=..`    | one page of results plus the total         |
//! | `GET /api/paragraphs/{id}`| paragraph, article metadata, mentions      |
//! | `GET /api/stats`          | the statistics report                      |
//!
//! Errors are `{"error": {"code", "message", ...}}` with a 4xx status.

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};

use matkb_core::index::{parse_query, persist, QueryError, SearchResult};
use matkb_core::ingest::ArticleMeta;
use matkb_core::kb::{compute_stats, load_kb, KbError, ValueFrequency, DEFAULT_TOP_EXAMPLES};
use matkb_core::tagger::{EntityCategory, EntityMention};
use matkb_core::{KnowledgeBase, Paragraph, SlotIndex, StatsReport};

pub const DEFAULT_MAX_PAGE_SIZE: usize = 100;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("max page size must be at least 1")]
    PageSize,
    #[error("bad CORS origin {0:?}")]
    CorsOrigin(String),
    #[error("loading index: {0}")]
    Index(#[from] persist::IndexError),
    #[error("loading knowledge base: {0}")]
    Kb(#[from] KbError),
    #[error("index holds {index} paragraphs but the knowledge base holds {kb}; rebuild the index")]
    Mismatch { index: usize, kb: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    pub index_path: PathBuf,
    pub kb_path: PathBuf,
    pub max_page_size: usize,
    /// Origins allowed cross-origin access; `*` allows any.
    pub cors_origins: Vec<String>,
}

impl ApiConfig {
    pub fn validate(&self) -> Result<(), ServerError> {
        if self.max_page_size == 0 {
            return Err(ServerError::PageSize);
        }
        for o in &self.cors_origins {
            if o != "*" && HeaderValue::from_str(o).is_err() {
                return Err(ServerError::CorsOrigin(o.clone()));
            }
        }
        Ok(())
    }
}

struct Inner {
    index: SlotIndex,
    kb: KnowledgeBase,
    stats: StatsReport,
    stats_json: String,
    max_page_size: usize,
}

/// Shared, immutable server state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(index: SlotIndex, kb: KnowledgeBase, max_page_size: usize) -> Result<Self, ServerError> {
        if max_page_size == 0 {
            return Err(ServerError::PageSize);
        }
        if index.len() != kb.paragraphs.len() {
            return Err(ServerError::Mismatch {
                index: index.len(),
                kb: kb.paragraphs.len(),
            });
        }
        let stats = compute_stats(&kb, DEFAULT_TOP_EXAMPLES);
        let stats_json = stats.to_json();
        Ok(AppState(Arc::new(Inner {
            index,
            kb,
            stats,
            stats_json,
            max_page_size,
        })))
    }

    pub fn load(config: &ApiConfig) -> Result<Self, ServerError> {
        config.validate()?;
        let index = persist::load_index(&config.index_path)?;
        let kb = load_kb(&config.kb_path)?;
        AppState::new(index, kb, config.max_page_size)
    }
}

fn error(status: StatusCode, code: &str, message: impl Into<String>, extra: Value) -> Response {
    let mut body = json!({ "code": code, "message": message.into() });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    (status, Json(json!({ "error": body }))).into_response()
}

fn valid_slots() -> Vec<&'static str> {
    EntityCategory::ALL.iter().map(|c| c.as_str()).collect()
}

fn query_error(e: QueryError) -> Response {
    let bad = StatusCode::BAD_REQUEST;
    match e {
        QueryError::Parse(p) => error(bad, "parse_error", p.message, json!({ "column": p.column })),
        QueryError::UnknownSlot(u) => error(bad, "unknown_slot", u.to_string(), json!({ "valid_slots": valid_slots() })),
        QueryError::Empty => error(bad, "empty_query", e.to_string(), Value::Null),
        QueryError::InvalidLimit => error(bad, "invalid_limit", e.to_string(), Value::Null),
    }
}

#[derive(Serialize)]
struct SlotInfo {
    name: &'static str,
    aliases: Vec<String>,
    distinct_values: u64,
    count: u64,
    top_values: Vec<ValueFrequency>,
}

async fn slots(State(s): State<AppState>) -> Json<Vec<SlotInfo>> {
    let out = s
        .0
        .stats
        .rows
        .iter()
        .map(|r| SlotInfo {
            name: r.category.as_str(),
            aliases: r.category.aliases(),
            distinct_values: r.unique_count,
            count: r.count,
            top_values: r.top_examples.clone(),
        })
        .collect();
    Json(out)
}

#[derive(Debug, Serialize)]
struct SearchResponse<'a> {
    total: usize,
    limit: usize,
    offset: usize,
    /// Set when the requested limit exceeded the server's page size.
    clamped: bool,
    results: &'a [SearchResult],
}

/// The error is the message for a `bad_parameter` response.
fn parse_usize(params: &HashMap<String, String>, key: &str) -> Result<Option<usize>, String> {
    match params.get(key) {
        None => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("{key} must be a non-negative integer, got {v:?}")),
    }
}

async fn search(State(s): State<AppState>, Query(params): Query<HashMap<String, String>>) -> Response {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    if q.trim().is_empty() {
        return query_error(QueryError::Empty);
    }
    let (limit, offset) = match (parse_usize(&params, "limit"), parse_usize(&params, "offset")) {
        (Ok(l), Ok(o)) => (l, o.unwrap_or(0)),
        (Err(m), _) | (_, Err(m)) => return error(StatusCode::BAD_REQUEST, "bad_parameter", m, Value::Null),
    };
    let mut query = match parse_query(q) {
        Ok(q) => q,
        Err(e) => return query_error(e.into()),
    };
    let explicit = limit.is_some();
    let requested = limit.unwrap_or(query.limit);
    let limit = requested.min(s.0.max_page_size);
    query = query.page(limit, offset);
    match s.0.index.query(&query) {
        Ok(page) => Json(SearchResponse {
            total: page.total,
            limit,
            offset,
            clamped: explicit && requested > limit,
            results: &page.results,
        })
        .into_response(),
        Err(e) => query_error(e),
    }
}

#[derive(Serialize)]
struct ParagraphResponse<'a> {
    paragraph: &'a Paragraph,
    article: ArticleMeta,
    mentions: Vec<&'a EntityMention>,
}

async fn paragraph(State(s): State<AppState>, Path(id): Path<String>) -> Response {
    let kb = &s.0.kb;
    match kb.paragraphs.get(&id) {
        None => error(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no paragraph with id {id:?}"),
            Value::Null,
        ),
        Some(p) => Json(ParagraphResponse {
            paragraph: p,
            article: kb.article_of(p),
            mentions: kb.mentions_of(&id).collect(),
        })
        .into_response(),
    }
}

async fn stats(State(s): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], s.0.stats_json.clone()).into_response()
}

async fn fallback() -> Response {
    error(StatusCode::NOT_FOUND, "not_found", "no such route", Value::Null)
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods([Method::GET]);
    if origins.iter().any(|o| o == "*") {
        layer.allow_origin(AllowOrigin::any())
    } else {
        let list: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
        layer.allow_origin(list)
    }
}

pub fn router(state: AppState, cors_origins: &[String]) -> Router {
    Router::new()
        .route("/api/slots", get(slots))
        .route("/api/search", get(search))
        .route("/api/paragraphs/:id", get(paragraph))
        .route("/api/stats", get(stats))
        .fallback(fallback)
        .layer(cors(cors_origins))
        .with_state(state)
}

/// Serves until `shutdown` resolves; in-flight requests are allowed to finish.
pub async fn serve<F>(listener: tokio::net::TcpListener, app: Router, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C, or SIGTERM on Unix.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}

/// Loads state per `config`, binds, and serves until a shutdown signal.
pub async fn run(config: ApiConfig) -> Result<(), ServerError> {
    let state = AppState::load(&config)?;
    let app = router(state, &config.cors_origins);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve(listener, app, shutdown_signal()).await?;
    Ok(())
}

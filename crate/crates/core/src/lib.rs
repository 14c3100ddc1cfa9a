//! Extraction and retrieval of materials-synthesis procedures.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! * [`ingest`] parses line-delimited article records into normalized paragraphs,
//! * [`filter`] keeps paragraphs that describe a synthesis procedure,
//! * [`tagger`] labels entity mentions in a 13-category schema,
//! * [`kb`] persists paragraphs and mentions and reports per-category statistics,
//! * [`index`] builds the slot-aware inverted index and answers slot queries.
//!
//! Scoring code (span metrics, BM25) is generic over [`scalar::Scalar`]; the
//! aliases below fix the concrete types the rest of the crate uses.

pub mod filter;
pub mod index;
pub mod ingest;
pub mod kb;
pub mod scalar;
pub mod tagger;
pub mod text;

pub use filter::{FilterDecision, FilterRuleSet, MatchedStrategy, RecallReport};
pub use index::{SearchResult, SlotIndex, SlotQuery};
pub use ingest::{ArticleRecord, IngestReport, Paragraph};
pub use kb::{KnowledgeBase, StatsReport};
pub use tagger::{EntityCategory, EntityMention, TaggerConfig};

/// Span-level precision/recall/F1 in floating point.
pub type SpanScores = tagger::eval::PrfScores<f64>;
/// Span-level precision/recall/F1 as exact fractions.
pub type ExactSpanScores = tagger::eval::PrfScores<num_rational::Ratio<i64>>;
/// Span-F1 report with per-category breakdown, floating point.
pub type SpanF1Report = tagger::eval::SpanF1Report<f64>;
/// BM25 weighting used by the index.
pub type Bm25 = index::bm25::Bm25<f64>;
/// Exact fraction used for filter recall.
pub type Fraction = num_rational::Ratio<u64>;

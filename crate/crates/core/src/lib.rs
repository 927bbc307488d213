//! Toolkit for mining sentence-simplification training pairs from paraphrase
//! corpora and for scoring simplification system outputs.
//!
//! The crate is organised around the pipeline stages:
//!
//! - [`corpus`] — domain types (sentences, parse trees, paraphrase pairs) and
//!   JSONL ingestion.
//! - [`readability`] — WNLL-based readability scores with pluggable
//!   likelihood sources (file-backed tracks or a built-in smoothed n-gram
//!   model).
//! - [`similarity`] — weighted Levenshtein, ordered tree edit distance over
//!   truncated constituency trees, and embedding cosine similarity.
//! - [`selection`] — orientation, filtering, binning, per-bin statistics and
//!   the mean-plus-or-minus-sigma quality gate, plus Pearson correlation and
//!   paired t-test analyses.
//! - [`idiom`] — idiom-paraphrase record parsing, explanation span location,
//!   task prompts, and span-restricted cross-entropy losses.
//! - [`metrics`] — SARI (character/word level, sentence and corpus
//!   aggregation) and corpus BLEU.
//! - [`cli`] — the `simpkit` command-line surface.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod idiom;
pub mod metrics;
pub mod pipeline;
pub mod readability;
pub mod selection;
pub mod similarity;

mod error;

pub use error::{Error, Result};

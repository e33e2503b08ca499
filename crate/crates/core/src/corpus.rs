//! Document and time-slice values shared by every stage.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

/// Lowercases, trims and collapses internal whitespace. A leading `#` is kept.
///
/// An empty return value means the token should be dropped.
pub fn normalize_token(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

/// One document of the stream with its pre-extracted tokens.
///
/// `tokens` are expected to be normalized already; duplicates are allowed and
/// collapse to a set when counting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub tokens: Vec<String>,
    /// Human annotation, one to three labels when present.
    pub labels: Option<Vec<String>>,
}

impl Document {
    pub fn token_set(&self) -> BTreeSet<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }

    /// Documents without tokens are kept in the corpus but never reach a graph.
    pub fn has_tokens(&self) -> bool {
        !self.tokens.is_empty()
    }
}

/// The documents falling into one timepoint bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSlice {
    /// Bucket label, e.g. `2020-08-19` for daily buckets.
    pub timepoint: String,
    /// Inclusive lower bound of the bucket in epoch seconds.
    pub start: i64,
    pub documents: Vec<Document>,
}

impl TimeSlice {
    pub fn new(timepoint: impl Into<String>, start: i64, documents: Vec<Document>) -> Self {
        Self { timepoint: timepoint.into(), start, documents }
    }

    /// Union of the per-document token sets.
    pub fn token_vocabulary(&self) -> BTreeSet<&str> {
        self.documents
            .iter()
            .flat_map(|d| d.tokens.iter().map(String::as_str))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

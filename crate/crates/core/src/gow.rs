//! Graph-of-words construction with NPMI edge weights.
//!
//! Co-occurrence is counted per document: two tokens co-occur when they appear
//! in the same document, however many times.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::TimeSlice;
use crate::graph::TemporalGraph;
use crate::{Error, Result};

/// Document-level presence counts for one slice.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CooccurrenceTable {
    /// Number of documents with at least one token.
    pub documents: u64,
    pub unigram: BTreeMap<String, u64>,
    /// Keyed by the lexicographically ordered pair.
    pub pair: BTreeMap<(String, String), u64>,
}

impl CooccurrenceTable {
    pub fn count(&self, token: &str) -> u64 {
        self.unigram.get(token).copied().unwrap_or(0)
    }

    pub fn pair_count(&self, a: &str, b: &str) -> u64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.pair.get(&(String::from(a), String::from(b))).copied().unwrap_or(0)
    }
}

pub fn count_cooccurrence(slice: &TimeSlice) -> CooccurrenceTable {
    let mut table = CooccurrenceTable::default();
    for doc in slice.documents.iter().filter(|d| d.has_tokens()) {
        table.documents += 1;
        let tokens: Vec<&str> = doc.token_set().into_iter().collect();
        for (i, a) in tokens.iter().enumerate() {
            *table.unigram.entry(String::from(*a)).or_insert(0) += 1;
            for b in &tokens[i + 1..] {
                *table.pair.entry((String::from(*a), String::from(*b))).or_insert(0) += 1;
            }
        }
    }
    table
}

fn check_counts(n_x: u64, n_y: u64, n_xy: u64, total: u64) -> Result<()> {
    let union_too_big = || n_x.checked_add(n_y).is_none_or(|s| s - n_xy > total);
    if n_xy == 0 || n_x < n_xy || n_y < n_xy || union_too_big() {
        return Err(Error::InvalidCounts { n_x, n_y, n_xy, total });
    }
    Ok(())
}

/// `ln(n_xy * N / (n_x * n_y))`.
pub fn pmi(n_x: u64, n_y: u64, n_xy: u64, total: u64) -> Result<f64> {
    check_counts(n_x, n_y, n_xy, total)?;
    Ok(libm::log((n_xy as f64 * total as f64) / (n_x as f64 * n_y as f64)))
}

/// PMI divided by the joint self-information `-ln(n_xy / N)`, in `[-1, 1]`.
///
/// When every document holds both tokens the self-information is zero and the
/// value is defined as 1.
pub fn npmi(n_x: u64, n_y: u64, n_xy: u64, total: u64) -> Result<f64> {
    check_counts(n_x, n_y, n_xy, total)?;
    if n_xy == total {
        return Ok(1.0);
    }
    // pmi = h - ln(n_x/n_xy) - ln(n_y/n_xy); both logs are >= 0, which keeps
    // the result <= 1 under rounding and exactly 1 only when n_x = n_y = n_xy.
    let h = libm::log(total as f64 / n_xy as f64);
    let excess = libm::log(n_x as f64 / n_xy as f64) + libm::log(n_y as f64 / n_xy as f64);
    Ok(1.0 - excess / h)
}

/// Builds the NPMI word graph of a slice, keeping pairs whose NPMI is
/// strictly above `weight_floor`.
pub fn build_gow(slice: &TimeSlice, weight_floor: f64) -> TemporalGraph {
    let table = count_cooccurrence(slice);
    let mut edges = Vec::new();
    for ((a, b), &n_xy) in &table.pair {
        let w = npmi(table.count(a), table.count(b), n_xy, table.documents)
            .expect("counts from a real slice satisfy the npmi contract");
        if w > weight_floor {
            edges.push((a.as_str(), b.as_str(), w));
        }
    }
    let graph = TemporalGraph::from_edges(slice.timepoint.clone(), edges);
    let isolated = table
        .unigram
        .keys()
        .filter(|t| graph.index_of(t).is_none())
        .cloned()
        .collect();
    graph.with_isolated(isolated)
}

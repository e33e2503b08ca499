//! Frequent label itemsets for folding co-occurring annotation topics together.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Document, TimeSlice};
use crate::{Error, Result};

pub type Itemset = BTreeSet<String>;

/// Labels of one annotated document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTransaction {
    pub document_id: String,
    pub items: BTreeSet<String>,
}

/// Transactions for every document carrying at least one label.
pub fn transactions<'a>(documents: impl IntoIterator<Item = &'a Document>) -> Vec<LabelTransaction> {
    documents
        .into_iter()
        .filter_map(|d| {
            let items: BTreeSet<String> = d.labels.as_ref()?.iter().cloned().collect();
            (!items.is_empty()).then(|| LabelTransaction { document_id: d.id.clone(), items })
        })
        .collect()
}

/// Support kept as an exact ratio of transaction counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Support {
    pub count: u64,
    pub total: u64,
}

impl Support {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count as f64 / self.total as f64
        }
    }

    /// Rational equality, independent of the denominators used.
    pub fn same_as(&self, other: &Support) -> bool {
        (self.count as u128) * (other.total as u128) == (other.count as u128) * (self.total as u128)
    }

    fn meets(&self, min_support: f64) -> bool {
        self.count as f64 >= min_support * self.total as f64 - 1e-9
    }
}

pub fn support(itemset: &Itemset, transactions: &[LabelTransaction]) -> Support {
    let count = transactions.iter().filter(|t| itemset.is_subset(&t.items)).count() as u64;
    Support { count, total: transactions.len() as u64 }
}

/// Largest itemset size considered; annotations carry at most three labels.
pub const MAX_ITEMSET_LEN: usize = 3;

/// Level-wise apriori enumeration of every itemset (up to three labels) whose
/// support reaches `min_support`.
pub fn frequent_itemsets(transactions: &[LabelTransaction], min_support: f64) -> Result<BTreeMap<Itemset, Support>> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::InvalidParameter { name: "min_support", reason: "must be in (0, 1]" });
    }
    let mut out = BTreeMap::new();
    if transactions.is_empty() {
        return Ok(out);
    }
    let longest = transactions.iter().map(|t| t.items.len()).max().unwrap_or(0).min(MAX_ITEMSET_LEN);

    let singles: BTreeSet<&String> = transactions.iter().flat_map(|t| t.items.iter()).collect();
    let mut level: Vec<Vec<String>> = singles.into_iter().map(|s| vec![s.clone()]).collect();
    let mut size = 1;
    while !level.is_empty() && size <= longest {
        let mut frequent = Vec::new();
        for candidate in level {
            let set: Itemset = candidate.iter().cloned().collect();
            let s = support(&set, transactions);
            if s.meets(min_support) {
                out.insert(set, s);
                frequent.push(candidate);
            }
        }
        size += 1;
        level = join_candidates(&frequent, &out);
    }
    Ok(out)
}

/// Joins sorted k-itemsets sharing their first k-1 items and drops candidates
/// with an infrequent k-subset.
fn join_candidates(frequent: &[Vec<String>], known: &BTreeMap<Itemset, Support>) -> Vec<Vec<String>> {
    let mut next = Vec::new();
    for (i, a) in frequent.iter().enumerate() {
        for b in &frequent[i + 1..] {
            let k = a.len();
            if a[..k - 1] != b[..k - 1] {
                continue;
            }
            let mut joined = a.clone();
            joined.push(b[k - 1].clone());
            joined.sort();
            let closed = (0..joined.len()).all(|skip| {
                let subset: Itemset =
                    joined.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, s)| s.clone()).collect();
                known.contains_key(&subset)
            });
            if closed {
                next.push(joined);
            }
        }
    }
    next.sort();
    next.dedup();
    next
}

/// Folds every itemset into a proper superset with identical support, until
/// nothing changes, and returns the survivors sorted.
///
/// The input order only decides which parent absorbs a subset first; the
/// surviving sets do not depend on it.
pub fn merge_subset_itemsets(itemsets: &[(Itemset, Support)]) -> Vec<(Itemset, Support)> {
    let mut alive = vec![true; itemsets.len()];
    loop {
        let mut changed = false;
        for (a, (set_a, supp_a)) in itemsets.iter().enumerate() {
            if !alive[a] {
                continue;
            }
            let parent = itemsets.iter().enumerate().position(|(b, (set_b, supp_b))| {
                b != a && alive[b] && set_a.len() < set_b.len() && set_a.is_subset(set_b) && supp_a.same_as(supp_b)
            });
            if parent.is_some() {
                alive[a] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out: Vec<(Itemset, Support)> =
        itemsets.iter().zip(&alive).filter(|(_, &a)| a).map(|(x, _)| x.clone()).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.dedup_by(|a, b| a.0 == b.0);
    out
}

/// Per-timepoint label clusters: each merged topic restricted to the labels
/// seen that day, keeping only maximal sets, plus any leftover label on its own.
pub fn labels_to_timepoint_clusters(slices: &[TimeSlice], merged: &[Itemset]) -> Vec<Vec<BTreeSet<String>>> {
    slices
        .iter()
        .map(|slice| {
            let present: BTreeSet<&String> =
                slice.documents.iter().filter_map(|d| d.labels.as_ref()).flatten().collect();
            let mut restricted: Vec<BTreeSet<String>> = merged
                .iter()
                .map(|topic| topic.iter().filter(|l| present.contains(l)).cloned().collect::<BTreeSet<_>>())
                .filter(|s| !s.is_empty())
                .collect();
            restricted.sort();
            restricted.dedup();
            let maximal: Vec<BTreeSet<String>> = restricted
                .iter()
                .filter(|s| !restricted.iter().any(|o| o.len() > s.len() && s.is_subset(o)))
                .cloned()
                .collect();
            let covered: BTreeSet<&String> = maximal.iter().flatten().collect();
            let mut clusters = maximal.clone();
            clusters.extend(
                present
                    .iter()
                    .filter(|l| !covered.contains(*l))
                    .map(|l| BTreeSet::from([(*l).clone()])),
            );
            clusters.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
            clusters
        })
        .collect()
}

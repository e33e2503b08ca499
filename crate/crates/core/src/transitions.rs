//! Typed transitions between the clusterings of successive timepoints.
//!
//! Two clusters are compared by their overlap relative to each side:
//! `forward = |X ∩ Y| / |X|` and `backward = |X ∩ Y| / |Y|`. A side "matches"
//! when its overlap reaches the threshold `alpha`. For a cluster `X` at one
//! timepoint and the clusters `Y` of the next, the first rule that applies wins:
//!
//! 1. unchanged: some `Y` matches both ways (largest forward overlap wins)
//! 2. absorbed: some `Y` matches forward only
//! 3. split: two or more `Y` match backward and jointly cover `alpha` of `X`
//! 4. dissolved: some `Y` matches backward only
//! 5. disappeared: nothing matched
//!
//! Independently, a next cluster `Y` is merged when two or more previous
//! clusters match it forward and jointly cover `alpha` of `Y`; those edges sit
//! next to the constituents' own forward edges. Next clusters with no incoming
//! edge have emerged. A disappeared cluster that matches a later emerged
//! cluster both ways, across at least one missing timepoint, has re-emerged.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// Slack for comparing float overlaps against the threshold, so that equal
/// ratios written differently (4/6 vs 2/3) compare equal.
const MATCH_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterId {
    /// Position of the timepoint in the slice sequence.
    pub timepoint: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterRef {
    pub timepoint: usize,
    pub index: usize,
    pub members: BTreeSet<String>,
}

impl ClusterRef {
    pub fn new<I, S>(timepoint: usize, index: usize, members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { timepoint, index, members: members.into_iter().map(Into::into).collect() }
    }

    pub fn id(&self) -> ClusterId {
        ClusterId { timepoint: self.timepoint, index: self.index }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionKind {
    Unchanged,
    Absorbed,
    Dissolved,
    Split,
    Merged,
    Disappeared,
    Emerged,
    ReEmerged,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 8] = [
        TransitionKind::Unchanged,
        TransitionKind::Absorbed,
        TransitionKind::Dissolved,
        TransitionKind::Split,
        TransitionKind::Merged,
        TransitionKind::Disappeared,
        TransitionKind::Emerged,
        TransitionKind::ReEmerged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::Unchanged => "unchanged",
            TransitionKind::Absorbed => "absorbed",
            TransitionKind::Dissolved => "dissolved",
            TransitionKind::Split => "split",
            TransitionKind::Merged => "merged",
            TransitionKind::Disappeared => "disappeared",
            TransitionKind::Emerged => "emerged",
            TransitionKind::ReEmerged => "re_emerged",
        }
    }

    /// Kinds that link two clusters and therefore chain into flows.
    pub fn links_clusters(self) -> bool {
        !matches!(self, TransitionKind::Emerged | TransitionKind::Disappeared)
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(Error::InvalidParameter { name: "transition kind", reason: "unknown kind" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEdge {
    pub from: Option<ClusterId>,
    pub to: Option<ClusterId>,
    pub kind: TransitionKind,
    pub overlap_forward: f64,
    pub overlap_backward: f64,
    /// Timepoint distance between the endpoints; above 1 only for re-emergence.
    pub gap: usize,
}

impl TransitionEdge {
    /// Timepoint the edge starts from (the target for emergence).
    pub fn anchor(&self) -> usize {
        self.from.or(self.to).map(|c| c.timepoint).unwrap_or(0)
    }
}

/// `(|X ∩ Y| / |X|, |X ∩ Y| / |Y|)`; zero when either side is empty.
pub fn overlap(x: &BTreeSet<String>, y: &BTreeSet<String>) -> (f64, f64) {
    if x.is_empty() || y.is_empty() {
        return (0.0, 0.0);
    }
    let shared = x.intersection(y).count() as f64;
    (shared / x.len() as f64, shared / y.len() as f64)
}

fn matches(ratio: f64, alpha: f64) -> bool {
    ratio >= alpha - MATCH_EPS
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "alpha", reason: "must be in (0, 1]" })
    }
}

/// Fraction of `base` covered by the union of `parts`.
fn coverage<'a>(base: &BTreeSet<String>, parts: impl Iterator<Item = &'a BTreeSet<String>>) -> f64 {
    let union: BTreeSet<&String> = parts.flat_map(|p| p.intersection(base)).collect();
    union.len() as f64 / base.len() as f64
}

fn edge(from: &ClusterRef, to: &ClusterRef, kind: TransitionKind, ov: (f64, f64)) -> TransitionEdge {
    TransitionEdge {
        from: Some(from.id()),
        to: Some(to.id()),
        kind,
        overlap_forward: ov.0,
        overlap_backward: ov.1,
        gap: to.timepoint.abs_diff(from.timepoint),
    }
}

/// Index of the best candidate by `key` (larger first, then lower index).
fn best_by(candidates: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    candidates.fold(None, |best, y| match best {
        Some(b) if key(b) >= key(y) => Some(b),
        _ => Some(y),
    })
}

/// Classifies the transitions from `prev` to `next` (consecutive timepoints).
///
/// Edges are ordered per previous cluster, then merged edges, then emergences.
pub fn classify_step(prev: &[ClusterRef], next: &[ClusterRef], alpha: f64) -> Result<Vec<TransitionEdge>> {
    check_alpha(alpha)?;
    let ov: Vec<Vec<(f64, f64)>> =
        prev.iter().map(|x| next.iter().map(|y| overlap(&x.members, &y.members)).collect()).collect();
    let mut incoming = vec![false; next.len()];
    let mut edges = Vec::new();

    for (xi, x) in prev.iter().enumerate() {
        let row = &ov[xi];
        let fwd = |y: usize| row[y].0;
        let bwd = |y: usize| row[y].1;
        let ys = || 0..next.len();
        let mut out = Vec::new();

        if let Some(y) = best_by(ys().filter(|&y| matches(fwd(y), alpha) && matches(bwd(y), alpha)), fwd) {
            out.push(edge(x, &next[y], TransitionKind::Unchanged, row[y]));
        } else if let Some(y) = best_by(ys().filter(|&y| matches(fwd(y), alpha)), fwd) {
            out.push(edge(x, &next[y], TransitionKind::Absorbed, row[y]));
        } else {
            let pieces: Vec<usize> = ys().filter(|&y| matches(bwd(y), alpha)).collect();
            let covered = coverage(&x.members, pieces.iter().map(|&y| &next[y].members));
            if pieces.len() >= 2 && matches(covered, alpha) {
                out.extend(pieces.iter().map(|&y| edge(x, &next[y], TransitionKind::Split, row[y])));
            } else if let Some(y) = best_by(pieces.into_iter(), bwd) {
                out.push(edge(x, &next[y], TransitionKind::Dissolved, row[y]));
            }
        }

        if out.is_empty() {
            out.push(TransitionEdge {
                from: Some(x.id()),
                to: None,
                kind: TransitionKind::Disappeared,
                overlap_forward: 0.0,
                overlap_backward: 0.0,
                gap: 1,
            });
        }
        for e in &out {
            if let Some(to) = e.to {
                incoming[next.iter().position(|y| y.id() == to).unwrap()] = true;
            }
        }
        edges.extend(out);
    }

    for (yi, y) in next.iter().enumerate() {
        let parts: Vec<usize> = (0..prev.len()).filter(|&x| matches(ov[x][yi].0, alpha)).collect();
        if parts.len() >= 2 && matches(coverage(&y.members, parts.iter().map(|&x| &prev[x].members)), alpha) {
            incoming[yi] = true;
            edges.extend(parts.iter().map(|&x| edge(&prev[x], y, TransitionKind::Merged, ov[x][yi])));
        }
    }

    for (yi, y) in next.iter().enumerate() {
        if !incoming[yi] {
            edges.push(TransitionEdge {
                from: None,
                to: Some(y.id()),
                kind: TransitionKind::Emerged,
                overlap_forward: 0.0,
                overlap_backward: 0.0,
                gap: 1,
            });
        }
    }
    Ok(edges)
}

/// Links disappeared clusters to later emerged clusters they match both ways.
///
/// `clusterings[t]` holds the clusters of timepoint `t`, with `index` equal to
/// their position. Disappearances are processed earliest first (then by
/// sorted members); each emerged cluster takes at most one re-emergence.
pub fn detect_reemergence(
    edges: &[TransitionEdge],
    clusterings: &[Vec<ClusterRef>],
    alpha: f64,
    max_gap: Option<usize>,
) -> Result<Vec<TransitionEdge>> {
    check_alpha(alpha)?;
    let emerged: BTreeSet<ClusterId> =
        edges.iter().filter(|e| e.kind == TransitionKind::Emerged).filter_map(|e| e.to).collect();
    let mut gone: Vec<&ClusterRef> = edges
        .iter()
        .filter(|e| e.kind == TransitionKind::Disappeared)
        .filter_map(|e| e.from)
        .map(|id| &clusterings[id.timepoint][id.index])
        .collect();
    gone.sort_by(|a, b| a.timepoint.cmp(&b.timepoint).then_with(|| a.members.cmp(&b.members)).then(a.index.cmp(&b.index)));

    let mut claimed = BTreeSet::new();
    let mut out = Vec::new();
    for x in gone {
        let last = match max_gap {
            Some(g) => (x.timepoint + g).min(clusterings.len().saturating_sub(1)),
            None => clusterings.len().saturating_sub(1),
        };
        let found = (x.timepoint + 2..=last).find_map(|t| {
            clusterings[t].iter().find(|y| {
                let (f, b) = overlap(&x.members, &y.members);
                emerged.contains(&y.id()) && !claimed.contains(&y.id()) && matches(f, alpha) && matches(b, alpha)
            })
        });
        if let Some(y) = found {
            claimed.insert(y.id());
            out.push(edge(x, y, TransitionKind::ReEmerged, overlap(&x.members, &y.members)));
        }
    }
    Ok(out)
}

/// A connected chain of transitions rooted at one emergence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub id: usize,
    pub root: ClusterId,
    /// Indices into the edge list the flow was built from, ordered by timepoint.
    pub edges: Vec<usize>,
    pub clusters: Vec<ClusterId>,
    /// Number of distinct timepoints the flow touches.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlowSet {
    pub flows: Vec<Flow>,
    /// Clusters not linked to any other cluster.
    pub singletons: Vec<ClusterId>,
}

/// Groups clusters into flows: components joined by every edge kind except
/// emergence and disappearance. `cluster_counts[t]` is the number of clusters
/// at timepoint `t`.
pub fn build_flows(edges: &[TransitionEdge], cluster_counts: &[usize]) -> FlowSet {
    let mut offset = Vec::with_capacity(cluster_counts.len());
    let mut total = 0;
    for &c in cluster_counts {
        offset.push(total);
        total += c;
    }
    let flat = |id: ClusterId| offset[id.timepoint] + id.index;
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges.iter().filter(|e| e.kind.links_clusters()) {
        if let (Some(a), Some(b)) = (e.from, e.to) {
            let (ra, rb) = (find(&mut parent, flat(a)), find(&mut parent, flat(b)));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<ClusterId>> = BTreeMap::new();
    for (t, &count) in cluster_counts.iter().enumerate() {
        for index in 0..count {
            let id = ClusterId { timepoint: t, index };
            groups.entry(find(&mut parent, flat(id))).or_default().push(id);
        }
    }
    let emerged: BTreeMap<ClusterId, usize> = edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == TransitionKind::Emerged)
        .filter_map(|(k, e)| e.to.map(|to| (to, k)))
        .collect();

    let mut set = FlowSet::default();
    for (_, members) in groups {
        if members.len() == 1 {
            set.singletons.push(members[0]);
            continue;
        }
        let inside: BTreeSet<ClusterId> = members.iter().copied().collect();
        // `members` is sorted by (timepoint, index), so the first emerged one is the root.
        let root = members.iter().copied().find(|c| emerged.contains_key(c)).unwrap_or(members[0]);
        let mut flow_edges: Vec<usize> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| match e.kind {
                TransitionKind::Emerged => e.to == Some(root),
                _ => e.from.is_some_and(|f| inside.contains(&f)),
            })
            .map(|(k, _)| k)
            .collect();
        flow_edges.sort_by_key(|&k| (edges[k].anchor(), k));
        let length = members.iter().map(|c| c.timepoint).collect::<BTreeSet<_>>().len();
        set.flows.push(Flow { id: 0, root, edges: flow_edges, clusters: members, length });
    }
    set.flows.sort_by_key(|f| f.root);
    for (id, flow) in set.flows.iter_mut().enumerate() {
        flow.id = id;
    }
    set.singletons.sort();
    set
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowSummary {
    pub flow_count: usize,
    /// Mean length over multi-timepoint flows; 0 when there are none.
    pub mean_length: f64,
    pub singleton_count: usize,
}

pub fn flow_summary(flows: &FlowSet) -> FlowSummary {
    let n = flows.flows.len();
    let total: usize = flows.flows.iter().map(|f| f.length).sum();
    FlowSummary {
        flow_count: n,
        mean_length: if n == 0 { 0.0 } else { total as f64 / n as f64 },
        singleton_count: flows.singletons.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionConfig {
    pub alpha: f64,
    /// Longest timepoint distance a re-emergence may span; unbounded when `None`.
    pub max_gap: Option<usize>,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self { alpha: 2.0 / 3.0, max_gap: None }
    }
}

/// Everything the transition engine derives from a sequence of clusterings.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracking {
    pub clusters: Vec<Vec<ClusterRef>>,
    /// Consecutive-step edges in timepoint order, then re-emergences.
    pub edges: Vec<TransitionEdge>,
    pub flows: FlowSet,
}

/// Runs classification, re-emergence detection and flow assembly over
/// `clusterings[t]`, the member sets of each timepoint's clusters.
///
/// Clusters of the first timepoint are reported as emerged.
pub fn trace_transitions(clusterings: &[Vec<BTreeSet<String>>], config: &TransitionConfig) -> Result<Tracking> {
    check_alpha(config.alpha)?;
    let clusters: Vec<Vec<ClusterRef>> = clusterings
        .iter()
        .enumerate()
        .map(|(t, cs)| {
            cs.iter()
                .enumerate()
                .map(|(i, m)| ClusterRef { timepoint: t, index: i, members: m.clone() })
                .collect()
        })
        .collect();
    let mut edges = Vec::new();
    if let Some(first) = clusters.first() {
        edges.extend(classify_step(&[], first, config.alpha)?);
    }
    for pair in clusters.windows(2) {
        edges.extend(classify_step(&pair[0], &pair[1], config.alpha)?);
    }
    let again = detect_reemergence(&edges, &clusters, config.alpha, config.max_gap)?;
    edges.extend(again);
    let counts: Vec<usize> = clusters.iter().map(Vec::len).collect();
    let flows = build_flows(&edges, &counts);
    Ok(Tracking { clusters, edges, flows })
}

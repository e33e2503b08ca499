//! Optimal clustering of a word graph by stripping bridging nodes.
//!
//! Nodes are ranked once by local clustering coefficient (lowest first). The
//! search clusters the full graph, then removes ranked nodes one at a time and
//! re-clusters what is left with MCL, keeping the first clustering that reaches
//! the highest weighted modularity. Removed nodes become bridging nodes and are
//! attached to every resulting cluster they had an edge into.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::TemporalGraph;
use crate::mcl::{mcl, MclParams};
use crate::{Error, Result};

/// Improvements smaller than this do not displace an earlier optimum.
const IMPROVEMENT_EPS: f64 = 1e-12;

/// Unweighted local clustering coefficient of node `index`.
///
/// Nodes with fewer than two neighbors get 1.0; such nodes cannot bridge
/// anything and are never removal candidates.
pub fn local_clustering(graph: &TemporalGraph, index: usize) -> f64 {
    let nb = graph.neighbors(index);
    let k = nb.len();
    if k < 2 {
        return 1.0;
    }
    let mut links = 0usize;
    for (p, &(a, _)) in nb.iter().enumerate() {
        for &(b, _) in &nb[p + 1..] {
            if graph.has_edge(a, b) {
                links += 1;
            }
        }
    }
    (2 * links) as f64 / (k * (k - 1)) as f64
}

pub fn clustering_coefficient(graph: &TemporalGraph, token: &str) -> Result<f64> {
    let index = graph.index_of(token).ok_or_else(|| Error::UnknownNode(String::from(token)))?;
    Ok(local_clustering(graph, index))
}

fn mean_clustering(graph: &TemporalGraph, nodes: impl Iterator<Item = usize>) -> Option<f64> {
    let (sum, n) = nodes.fold((0.0, 0usize), |(s, n), v| (s + local_clustering(graph, v), n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Weighted modularity of `partition` (lists of node indices).
///
/// The partition must cover every node exactly once. A graph without edge
/// weight has modularity 0.
pub fn modularity(graph: &TemporalGraph, partition: &[Vec<usize>]) -> Result<f64> {
    let n = graph.node_count();
    let mut label = vec![usize::MAX; n];
    for (c, members) in partition.iter().enumerate() {
        for &v in members {
            if v >= n {
                return Err(Error::InvalidPartition("node index out of range"));
            }
            if label[v] != usize::MAX {
                return Err(Error::InvalidPartition("node assigned to two communities"));
            }
            label[v] = c;
        }
    }
    if label.contains(&usize::MAX) {
        return Err(Error::InvalidPartition("node without a community"));
    }
    let two_m = 2.0 * graph.total_weight();
    if two_m == 0.0 {
        return Ok(0.0);
    }
    let mut strength = vec![0.0f64; partition.len()];
    let mut internal = 0.0;
    for (i, j, w) in graph.edges() {
        strength[label[i]] += w;
        strength[label[j]] += w;
        if label[i] == label[j] {
            internal += 2.0 * w;
        }
    }
    let expected: f64 = strength.iter().map(|s| (s / two_m) * (s / two_m)).sum();
    Ok(internal / two_m - expected)
}

/// Maps token clusters onto node indices of `graph`.
pub fn partition_indices(graph: &TemporalGraph, clusters: &[Vec<String>]) -> Result<Vec<Vec<usize>>> {
    clusters
        .iter()
        .map(|c| {
            c.iter()
                .map(|t| graph.index_of(t).ok_or_else(|| Error::UnknownNode(t.clone())))
                .collect()
        })
        .collect()
}

/// Knobs of the node-removal search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalSearch {
    pub mcl: MclParams,
    /// Removal stops once more than this fraction of nodes would be gone.
    pub max_removal_fraction: f64,
    /// Stop after this many consecutive non-improving removals; 0 disables.
    pub early_stop_patience: usize,
}

impl Default for OptimalSearch {
    fn default() -> Self {
        Self { mcl: MclParams::default(), max_removal_fraction: 0.5, early_stop_patience: 0 }
    }
}

impl OptimalSearch {
    pub fn validate(&self) -> Result<()> {
        self.mcl.validate()?;
        if !(0.0..=1.0).contains(&self.max_removal_fraction) {
            return Err(Error::InvalidParameter {
                name: "max_removal_fraction",
                reason: "must be in [0, 1]",
            });
        }
        Ok(())
    }
}

/// One evaluated iteration of the removal loop. Iteration 0 removes nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalStep {
    pub removed: Option<String>,
    pub modularity: f64,
    pub cluster_count: usize,
}

/// Per-timepoint clustering statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SliceStats {
    /// Mean coefficient of the removed nodes, measured on the original graph.
    pub mean_c_removed: Option<f64>,
    pub mean_c_all: f64,
    /// Mean coefficient over the retained subgraph.
    pub mean_c_best: f64,
    pub pct_removed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub timepoint: String,
    /// Sorted by size descending, then first member; members sorted.
    pub clusters: Vec<Vec<String>>,
    /// Removed nodes in removal order.
    pub bridging_nodes: Vec<String>,
    /// Cluster indices each bridging node attaches to, aligned with `bridging_nodes`.
    pub bridging_membership: Vec<BTreeSet<usize>>,
    pub modularity: f64,
    pub stats: SliceStats,
    pub trace: Vec<RemovalStep>,
    /// Whether MCL converged for the chosen clustering.
    pub converged: bool,
}

impl ClusteringResult {
    fn empty(timepoint: &str) -> Self {
        Self {
            timepoint: String::from(timepoint),
            clusters: Vec::new(),
            bridging_nodes: Vec::new(),
            bridging_membership: Vec::new(),
            modularity: 0.0,
            stats: SliceStats::default(),
            trace: Vec::new(),
            converged: true,
        }
    }

    pub fn membership(&self, token: &str) -> Option<&BTreeSet<usize>> {
        let at = self.bridging_nodes.iter().position(|b| b == token)?;
        self.bridging_membership.get(at)
    }

    /// Bridging nodes left without any cluster to attach to.
    pub fn orphans(&self) -> impl Iterator<Item = &str> {
        self.bridging_nodes
            .iter()
            .zip(&self.bridging_membership)
            .filter(|(_, m)| m.is_empty())
            .map(|(b, _)| b.as_str())
    }

    /// Bridging nodes attached to cluster `index`.
    pub fn attached_to(&self, index: usize) -> impl Iterator<Item = &str> {
        self.bridging_nodes
            .iter()
            .zip(&self.bridging_membership)
            .filter(move |(_, m)| m.contains(&index))
            .map(|(b, _)| b.as_str())
    }

    /// The subgraph of `original` the clusters were computed on.
    pub fn retained_graph(&self, original: &TemporalGraph) -> TemporalGraph {
        let removed: BTreeSet<&str> = self.bridging_nodes.iter().map(String::as_str).collect();
        let keep: Vec<bool> = original.nodes().iter().map(|n| !removed.contains(n.as_str())).collect();
        original.induced(&keep)
    }
}

/// Removal order: candidates with degree >= 2, lowest coefficient first, then
/// higher degree, then token order.
pub fn removal_order(graph: &TemporalGraph) -> Vec<usize> {
    let mut ranked: Vec<(f64, usize, usize)> = (0..graph.node_count())
        .filter(|&v| graph.degree(v) >= 2)
        .map(|v| (local_clustering(graph, v), graph.degree(v), v))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    ranked.into_iter().map(|(_, _, v)| v).collect()
}

struct Evaluation {
    clusters: Vec<Vec<String>>,
    modularity: f64,
    converged: bool,
}

fn evaluate(graph: &TemporalGraph, keep: &[bool], params: &MclParams) -> Result<Evaluation> {
    let sub = graph.induced(keep);
    let found = mcl(&sub, params)?;
    let q = modularity(&sub, &found.clusters)?;
    let mut clusters: Vec<Vec<String>> = found
        .clusters
        .iter()
        .map(|c| c.iter().map(|&v| String::from(sub.name(v))).collect())
        .collect();
    clusters.sort_by(|a: &Vec<String>, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    Ok(Evaluation { clusters, modularity: q, converged: found.converged })
}

/// Runs the removal search on `graph` and returns the first clustering with
/// maximal modularity, with bridging membership and statistics filled in.
pub fn find_optimal_clustering(graph: &TemporalGraph, search: &OptimalSearch) -> Result<ClusteringResult> {
    search.validate()?;
    let mut result = ClusteringResult::empty(graph.timepoint());
    let n = graph.node_count();
    if n == 0 {
        return Ok(result);
    }

    let mut keep = vec![true; n];
    let baseline = evaluate(graph, &keep, &search.mcl)?;
    result.trace.push(RemovalStep {
        removed: None,
        modularity: baseline.modularity,
        cluster_count: baseline.clusters.len(),
    });
    let mut best = baseline;
    let mut best_removed = 0;

    if n >= 3 {
        let order = removal_order(graph);
        let mut stale = 0;
        for (step, &v) in order.iter().enumerate() {
            let removed = step + 1;
            if n - removed < 3 || removed as f64 / n as f64 > search.max_removal_fraction {
                break;
            }
            keep[v] = false;
            let current = evaluate(graph, &keep, &search.mcl)?;
            result.trace.push(RemovalStep {
                removed: Some(String::from(graph.name(v))),
                modularity: current.modularity,
                cluster_count: current.clusters.len(),
            });
            if current.modularity > best.modularity + IMPROVEMENT_EPS {
                best = current;
                best_removed = removed;
                stale = 0;
            } else {
                stale += 1;
                if search.early_stop_patience > 0 && stale >= search.early_stop_patience {
                    break;
                }
            }
        }
    }

    result.clusters = best.clusters;
    result.modularity = best.modularity;
    result.converged = best.converged;
    result.bridging_nodes = result.trace[1..=best_removed]
        .iter()
        .filter_map(|s| s.removed.clone())
        .collect();
    let mut result = attach_bridging_membership(result, graph);
    result.stats = compute_slice_stats(&result, graph);
    Ok(result)
}

/// Attaches each bridging node to every cluster holding one of its original
/// neighbors.
pub fn attach_bridging_membership(mut result: ClusteringResult, original: &TemporalGraph) -> ClusteringResult {
    let cluster_of: BTreeMap<&str, usize> = result
        .clusters
        .iter()
        .enumerate()
        .flat_map(|(c, members)| members.iter().map(move |m| (m.as_str(), c)))
        .collect();
    result.bridging_membership = result
        .bridging_nodes
        .iter()
        .map(|b| match original.index_of(b) {
            Some(v) => original
                .neighbors(v)
                .iter()
                .filter_map(|&(u, _)| cluster_of.get(original.name(u)).copied())
                .collect(),
            None => BTreeSet::new(),
        })
        .collect();
    result
}

pub fn compute_slice_stats(result: &ClusteringResult, original: &TemporalGraph) -> SliceStats {
    let n = original.node_count();
    if n == 0 {
        return SliceStats::default();
    }
    let removed: Vec<usize> = result.bridging_nodes.iter().filter_map(|b| original.index_of(b)).collect();
    let retained = result.retained_graph(original);
    SliceStats {
        mean_c_removed: mean_clustering(original, removed.iter().copied()),
        mean_c_all: mean_clustering(original, 0..n).unwrap_or(0.0),
        mean_c_best: mean_clustering(&retained, 0..retained.node_count()).unwrap_or(0.0),
        pct_removed: 100.0 * removed.len() as f64 / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn clique(prefix: &str, size: usize) -> Vec<(String, String, f64)> {
        let mut e = Vec::new();
        for i in 0..size {
            for j in i + 1..size {
                e.push((format!("{prefix}{i}"), format!("{prefix}{j}"), 1.0));
            }
        }
        e
    }

    fn two_triangles() -> TemporalGraph {
        let mut e = clique("a", 3);
        e.extend(clique("b", 3));
        TemporalGraph::from_edges("t", e)
    }

    fn hub_of_cliques() -> TemporalGraph {
        let mut e = Vec::new();
        for p in ["p", "q", "r"] {
            e.extend(clique(p, 4));
            for i in 0..4 {
                e.push((String::from("hub"), format!("{p}{i}"), 1.0));
            }
        }
        TemporalGraph::from_edges("t", e)
    }

    #[test]
    fn coefficient_examples() {
        let tri = TemporalGraph::from_edges("t", [("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)]);
        assert_eq!(clustering_coefficient(&tri, "a").unwrap(), 1.0);
        let star = TemporalGraph::from_edges("t", [("c", "x", 1.0), ("c", "y", 1.0), ("c", "z", 1.0)]);
        assert_eq!(clustering_coefficient(&star, "c").unwrap(), 0.0);
        assert_eq!(clustering_coefficient(&star, "x").unwrap(), 1.0);
        let g = TemporalGraph::from_edges(
            "t",
            [("v", "a", 1.0), ("v", "b", 1.0), ("v", "c", 1.0), ("a", "b", 1.0), ("b", "c", 1.0)],
        );
        assert!((clustering_coefficient(&g, "v").unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(clustering_coefficient(&g, "nope"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn modularity_examples() {
        let g = two_triangles();
        assert_eq!(modularity(&g, &[(0..6).collect()]).unwrap(), 0.0);
        assert!((modularity(&g, &[vec![0, 1, 2], vec![3, 4, 5]]).unwrap() - 0.5).abs() < 1e-15);
        let k3 = TemporalGraph::from_edges("t", clique("a", 3));
        let q = modularity(&k3, &[vec![0], vec![1], vec![2]]).unwrap();
        assert!((q + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn modularity_rejects_bad_partitions() {
        let g = two_triangles();
        assert!(modularity(&g, &[vec![0, 1, 2]]).is_err());
        assert!(modularity(&g, &[vec![0, 1, 2, 3, 4, 5], vec![0]]).is_err());
        assert!(modularity(&g, &[vec![0, 1, 2, 3, 4, 5, 9]]).is_err());
        let edgeless = TemporalGraph::from_parts("t", ["a", "b"], core::iter::empty::<(&str, &str, f64)>());
        assert_eq!(modularity(&edgeless, &[vec![0], vec![1]]).unwrap(), 0.0);
    }

    #[test]
    fn hub_is_removed_and_attached_everywhere() {
        let g = hub_of_cliques();
        let r = find_optimal_clustering(&g, &OptimalSearch::default()).unwrap();
        assert_eq!(r.bridging_nodes, ["hub"]);
        assert_eq!(r.clusters.len(), 3);
        assert_eq!(r.membership("hub").unwrap().iter().copied().collect::<Vec<_>>(), [0, 1, 2]);
        assert!((r.modularity - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.stats.pct_removed - 100.0 / 13.0).abs() < 1e-12);
        assert_eq!(r.stats.mean_c_best, 1.0);
        assert!(r.stats.mean_c_best >= r.stats.mean_c_all);
        let retained = r.retained_graph(&g);
        let q = modularity(&retained, &partition_indices(&retained, &r.clusters).unwrap()).unwrap();
        assert!((q - r.modularity).abs() < 1e-9);
    }

    #[test]
    fn clean_graph_keeps_baseline() {
        let r = find_optimal_clustering(&two_triangles(), &OptimalSearch::default()).unwrap();
        assert!(r.bridging_nodes.is_empty());
        assert!((r.modularity - 0.5).abs() < 1e-15);
        assert_eq!(r.stats.mean_c_removed, None);
        assert_eq!(r.stats.pct_removed, 0.0);
        assert_eq!(r.stats.mean_c_best, r.stats.mean_c_all);
    }

    #[test]
    fn path_of_three_is_baseline_only() {
        let g = TemporalGraph::from_edges("t", [("a", "b", 1.0), ("b", "c", 1.0)]);
        let r = find_optimal_clustering(&g, &OptimalSearch::default()).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert!(r.bridging_nodes.is_empty());
    }

    #[test]
    fn membership_rules() {
        let g = hub_of_cliques();
        let base = ClusteringResult {
            clusters: vec![
                (0..4).map(|i| format!("p{i}")).collect(),
                (0..4).map(|i| format!("q{i}")).collect(),
            ],
            bridging_nodes: vec![String::from("hub"), String::from("r0")],
            ..ClusteringResult::empty("t")
        };
        let r = attach_bridging_membership(base, &g);
        assert_eq!(r.membership("hub").unwrap().len(), 2);
        // r0's neighbors are r1..r3 and the hub, none of them clustered.
        assert!(r.membership("r0").unwrap().is_empty());
        assert_eq!(r.orphans().collect::<Vec<_>>(), ["r0"]);

        let single = ClusteringResult {
            clusters: vec![(1..4).map(|i| format!("p{i}")).collect()],
            bridging_nodes: vec![String::from("p0")],
            ..ClusteringResult::empty("t")
        };
        let r = attach_bridging_membership(single, &g);
        assert_eq!(r.membership("p0").unwrap().iter().copied().collect::<Vec<_>>(), [0]);
    }

    #[test]
    fn patience_stops_early() {
        let g = hub_of_cliques();
        let full = find_optimal_clustering(&g, &OptimalSearch::default()).unwrap();
        let search = OptimalSearch { early_stop_patience: 1, ..OptimalSearch::default() };
        let early = find_optimal_clustering(&g, &search).unwrap();
        assert!(early.trace.len() < full.trace.len());
        assert_eq!(early.bridging_nodes, full.bridging_nodes);
    }

    #[test]
    fn removal_fraction_caps_the_search() {
        let g = hub_of_cliques();
        let r = find_optimal_clustering(&g, &OptimalSearch::default()).unwrap();
        // 13 nodes at 50%: at most 6 removals after the baseline.
        assert_eq!(r.trace.len(), 7);
    }
}

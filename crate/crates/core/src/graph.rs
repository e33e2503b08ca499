//! Undirected weighted graph over tokens.
//!
//! Nodes are kept in lexicographic order so every algorithm that walks them
//! by index is independent of insertion order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Word graph for one timepoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TemporalGraph {
    timepoint: String,
    nodes: Vec<String>,
    /// Neighbor lists sorted by node index. No self-loops.
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Vocabulary tokens that ended up without any edge.
    isolated: Vec<String>,
}

impl TemporalGraph {
    /// Builds a graph from weighted edges. Repeated pairs keep the last weight;
    /// self-loops are ignored.
    pub fn from_edges<I, S>(timepoint: impl Into<String>, edges: I) -> Self
    where
        I: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        Self::from_parts(timepoint, core::iter::empty::<String>(), edges)
    }

    /// Like [`TemporalGraph::from_edges`] but also adds `nodes`, which may end
    /// up without neighbors.
    pub fn from_parts<N, I, S, T>(timepoint: impl Into<String>, nodes: N, edges: I) -> Self
    where
        N: IntoIterator<Item = T>,
        T: Into<String>,
        I: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        let mut pairs: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut names: BTreeMap<String, usize> = nodes.into_iter().map(|n| (n.into(), 0)).collect();
        for (a, b, w) in edges {
            let (a, b) = (a.into(), b.into());
            if a == b {
                continue;
            }
            names.insert(a.clone(), 0);
            names.insert(b.clone(), 0);
            let key = if a < b { (a, b) } else { (b, a) };
            pairs.insert(key, w);
        }
        for (i, slot) in names.values_mut().enumerate() {
            *slot = i;
        }
        let mut adjacency = alloc::vec![Vec::new(); names.len()];
        for ((a, b), w) in &pairs {
            let (ia, ib) = (names[a], names[b]);
            adjacency[ia].push((ib, *w));
            adjacency[ib].push((ia, *w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(j, _)| j);
        }
        Self {
            timepoint: timepoint.into(),
            nodes: names.into_keys().collect(),
            adjacency,
            isolated: Vec::new(),
        }
    }

    pub fn with_isolated(mut self, mut isolated: Vec<String>) -> Self {
        isolated.sort();
        isolated.dedup();
        self.isolated = isolated;
        self
    }

    pub fn timepoint(&self) -> &str {
        &self.timepoint
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn isolated(&self) -> &[String] {
        &self.isolated
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(token)).ok()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.nodes[index]
    }

    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    /// Unweighted degree.
    pub fn degree(&self, index: usize) -> usize {
        self.adjacency[index].len()
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, index: usize) -> f64 {
        self.adjacency[index].iter().map(|&(_, w)| w).sum()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_weight(a, b).is_some()
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let list = &self.adjacency[a];
        list.binary_search_by_key(&b, |&(j, _)| j).ok().map(|k| list[k].1)
    }

    /// Weight between two tokens, symmetric.
    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.edge_weight(self.index_of(a)?, self.index_of(b)?)
    }

    /// Each undirected edge once as `(i, j, w)` with `i < j`, in index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter().filter(move |&&(j, _)| j > i).map(move |&(j, w)| (i, j, w))
        })
    }

    /// Sum of edge weights, each edge counted once.
    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Subgraph on the nodes with `keep[i] == true`, including nodes the
    /// restriction leaves without neighbors. The isolated registry is carried over.
    pub fn induced(&self, keep: &[bool]) -> TemporalGraph {
        debug_assert_eq!(keep.len(), self.nodes.len());
        let mut remap = alloc::vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, name) in self.nodes.iter().enumerate() {
            if keep[i] {
                remap[i] = nodes.len();
                nodes.push(name.clone());
            }
        }
        let adjacency = self
            .adjacency
            .iter()
            .enumerate()
            .filter(|(i, _)| keep[*i])
            .map(|(_, list)| {
                list.iter()
                    .filter(|&&(j, _)| keep[j])
                    .map(|&(j, w)| (remap[j], w))
                    .collect()
            })
            .collect();
        TemporalGraph {
            timepoint: self.timepoint.clone(),
            nodes,
            adjacency,
            isolated: self.isolated.clone(),
        }
    }

    /// Connected components as sorted index lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut seen = alloc::vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = alloc::vec![start];
            let mut members = Vec::new();
            while let Some(v) = stack.pop() {
                members.push(v);
                for &(u, _) in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn insertion_order_does_not_matter() {
        let a = TemporalGraph::from_edges("t", [("b", "c", 0.5), ("a", "b", 1.0)]);
        let b = TemporalGraph::from_edges("t", [("b", "a", 1.0), ("c", "b", 0.5)]);
        assert_eq!(a, b);
        assert_eq!(a.nodes(), ["a", "b", "c"]);
        assert_eq!(a.weight("c", "b"), Some(0.5));
        assert_eq!(a.weight("a", "c"), None);
        assert_eq!(a.edge_count(), 2);
    }

    #[test]
    fn induced_keeps_stranded_nodes() {
        let g = TemporalGraph::from_edges("t", [("a", "b", 1.0), ("b", "c", 1.0)]);
        let sub = g.induced(&[true, false, true]);
        assert_eq!(sub.nodes(), ["a", "c"]);
        assert_eq!(sub.edge_count(), 0);
        assert_eq!(sub.components(), vec![vec![0], vec![1]]);
    }
}

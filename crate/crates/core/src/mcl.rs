//! Markov clustering over a sparse column-stochastic flow matrix.
//!
//! Each connected component is clustered on its own. The flow matrix of a
//! disconnected graph is block diagonal, so this is the same computation
//! restricted to its blocks, and clusters can never span components.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::graph::TemporalGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MclParams {
    /// Matrix power applied in the expansion step.
    pub expansion: u32,
    /// Entrywise exponent applied in the inflation step.
    pub inflation: f64,
    pub prune_epsilon: f64,
    pub convergence_tol: f64,
    pub max_iterations: usize,
    /// Weight of the self-loop added to every node.
    pub self_loop: f64,
}

impl Default for MclParams {
    fn default() -> Self {
        Self {
            expansion: 2,
            inflation: 2.0,
            prune_epsilon: 1e-5,
            convergence_tol: 1e-6,
            max_iterations: 100,
            self_loop: 1.0,
        }
    }
}

impl MclParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if self.expansion < 2 {
            return bad("expansion", "must be an integer >= 2");
        }
        if !(self.inflation.is_finite() && self.inflation > 1.0) {
            return bad("inflation", "must be a finite real > 1");
        }
        if !(0.0..1.0).contains(&self.prune_epsilon) {
            return bad("prune_epsilon", "must be in [0, 1)");
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return bad("convergence_tol", "must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations", "must be positive");
        }
        if self.self_loop.is_nan() || self.self_loop <= 0.0 {
            return bad("self_loop", "must be positive");
        }
        Ok(())
    }
}

/// Column-major sparse matrix; each column holds `(row, value)` sorted by row.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    cols: Vec<Vec<(usize, f64)>>,
}

impl FlowMatrix {
    fn from_graph(graph: &TemporalGraph, members: &[usize], self_loop: f64) -> Self {
        let mut local = vec![usize::MAX; graph.node_count()];
        for (k, &v) in members.iter().enumerate() {
            local[v] = k;
        }
        let cols = members
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let mut col: Vec<(usize, f64)> = graph
                    .neighbors(v)
                    .iter()
                    .filter(|&&(u, _)| local[u] != usize::MAX)
                    .map(|&(u, w)| (local[u], w))
                    .collect();
                col.push((k, self_loop));
                col.sort_by_key(|&(r, _)| r);
                col
            })
            .collect();
        let mut m = Self { cols };
        m.normalize();
        m
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let c = &self.cols[col];
        c.binary_search_by_key(&row, |&(r, _)| r).map(|k| c[k].1).unwrap_or(0.0)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.cols.iter().map(|c| c.iter().map(|&(_, v)| v).sum()).collect()
    }

    fn normalize(&mut self) {
        for col in &mut self.cols {
            let sum: f64 = col.iter().map(|&(_, v)| v).sum();
            if sum > 0.0 {
                for (_, v) in col.iter_mut() {
                    *v /= sum;
                }
            }
        }
    }

    fn multiply(&self, rhs: &FlowMatrix) -> FlowMatrix {
        let n = self.dim();
        let mut acc = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let cols = rhs
            .cols
            .iter()
            .map(|rcol| {
                for &(k, b) in rcol {
                    for &(i, a) in &self.cols[k] {
                        if acc[i] == 0.0 {
                            touched.push(i);
                        }
                        acc[i] += a * b;
                    }
                }
                touched.sort_unstable();
                let col = touched.iter().map(|&i| (i, acc[i])).filter(|&(_, v)| v > 0.0).collect();
                for &i in &touched {
                    acc[i] = 0.0;
                }
                touched.clear();
                col
            })
            .collect();
        FlowMatrix { cols }
    }

    fn expand(&self, power: u32) -> FlowMatrix {
        let mut out = self.multiply(self);
        for _ in 2..power {
            out = out.multiply(self);
        }
        out
    }

    fn inflate(&mut self, exponent: f64) {
        for col in &mut self.cols {
            for (_, v) in col.iter_mut() {
                *v = libm::pow(*v, exponent);
            }
        }
        self.normalize();
    }

    fn prune(&mut self, epsilon: f64) {
        for col in &mut self.cols {
            let keep = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
                .map(|(k, _)| k);
            let mut k = 0;
            col.retain(|&(_, v)| {
                let kept = v >= epsilon || Some(k) == keep;
                k += 1;
                kept
            });
        }
        self.normalize();
    }

    fn max_change(&self, other: &FlowMatrix) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.cols.iter().zip(&other.cols) {
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let d = match (a.get(i), b.get(j)) {
                    (Some(&(ra, va)), Some(&(rb, vb))) => match ra.cmp(&rb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                            va - vb
                        }
                        Ordering::Less => {
                            i += 1;
                            va
                        }
                        Ordering::Greater => {
                            j += 1;
                            vb
                        }
                    },
                    (Some(&(_, va)), None) => {
                        i += 1;
                        va
                    }
                    (None, Some(&(_, vb))) => {
                        j += 1;
                        vb
                    }
                    (None, None) => break,
                };
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Reads clusters off the limit matrix. Attractors are nodes with mass on
    /// their own diagonal; attractors that exchange flow form one system, and
    /// every other node joins the system of its heaviest attractor (ties go to
    /// the lower cluster index).
    fn interpret(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let attractor: Vec<bool> = (0..n).map(|i| self.get(i, i) > 0.0).collect();

        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for j in (0..n).filter(|&j| attractor[j]) {
            for &(i, _) in &self.cols[j] {
                if attractor[i] {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }

        let mut cluster_of = vec![usize::MAX; n];
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for i in (0..n).filter(|&i| attractor[i]) {
            let root = find(&mut parent, i);
            if cluster_of[root] == usize::MAX {
                cluster_of[root] = clusters.len();
                clusters.push(Vec::new());
            }
            cluster_of[i] = cluster_of[root];
            clusters[cluster_of[i]].push(i);
        }
        for j in (0..n).filter(|&j| !attractor[j]) {
            let best = self.cols[j]
                .iter()
                .filter(|&&(i, _)| attractor[i])
                .map(|&(i, v)| (cluster_of[i], v))
                .fold(None, |best: Option<(usize, f64)>, (c, v)| match best {
                    Some((bc, bv)) if bv > v || (bv == v && bc <= c) => Some((bc, bv)),
                    _ => Some((c, v)),
                });
            match best {
                Some((c, _)) => clusters[c].push(j),
                None => clusters.push(vec![j]),
            }
        }
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_by_key(|c| c[0]);
        clusters
    }
}

/// Clusters found by MCL, as sorted node-index lists ordered by first member.
#[derive(Debug, Clone, PartialEq)]
pub struct MclClustering {
    pub clusters: Vec<Vec<usize>>,
    /// False when some component hit `max_iterations` before settling.
    pub converged: bool,
    /// Largest iteration count over all components.
    pub iterations: usize,
}

pub fn mcl(graph: &TemporalGraph, params: &MclParams) -> Result<MclClustering> {
    mcl_observed(graph, params, &mut |_| {})
}

/// Runs MCL and hands the flow matrix of each component to `observer` after
/// every iteration (after pruning and renormalization).
pub fn mcl_observed(
    graph: &TemporalGraph,
    params: &MclParams,
    observer: &mut dyn FnMut(&FlowMatrix),
) -> Result<MclClustering> {
    params.validate()?;
    let mut out = MclClustering { clusters: Vec::new(), converged: true, iterations: 0 };
    for members in graph.components() {
        if members.len() == 1 {
            out.clusters.push(members);
            continue;
        }
        let mut m = FlowMatrix::from_graph(graph, &members, params.self_loop);
        let mut converged = false;
        let mut iterations = 0;
        while iterations < params.max_iterations {
            iterations += 1;
            let mut next = m.expand(params.expansion);
            next.inflate(params.inflation);
            next.prune(params.prune_epsilon);
            observer(&next);
            let change = next.max_change(&m);
            m = next;
            if change < params.convergence_tol {
                converged = true;
                break;
            }
        }
        out.converged &= converged;
        out.iterations = out.iterations.max(iterations);
        out.clusters
            .extend(m.interpret().into_iter().map(|c| c.into_iter().map(|k| members[k]).collect()));
    }
    out.clusters.sort_by_key(|c| c[0]);
    Ok(out)
}

//! On-disk output formats. JSON floats are written with exactly six decimal
//! places; supports are written as integer ratios.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use topicflow_core::clustering::ClusteringResult;
use topicflow_core::itemsets::{Itemset, Support};
use topicflow_core::transitions::{ClusterId, FlowSet, FlowSummary, TransitionEdge, TransitionKind};
use topicflow_core::TemporalGraph;

/// A float that serializes with six decimal places.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Fixed6(pub f64);

pub fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(fixed6(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

/// Serde adapter writing a transition kind by its name.
pub mod kind_name {
    use serde::{Deserialize, Deserializer, Serializer};
    use topicflow_core::transitions::TransitionKind;

    pub fn serialize<S: Serializer>(kind: &TransitionKind, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(kind.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<TransitionKind, D::Error> {
        let name = String::deserialize(deserializer)?;
        name.parse().map_err(|_| serde::de::Error::custom(format!("unknown transition kind {name:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgingRecord {
    pub token: String,
    pub attached: Vec<usize>,
}

/// Per-timepoint numbers behind the statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub documents: usize,
    pub nodes: usize,
    pub edges: usize,
    pub isolated: usize,
    pub c_rm: Option<Fixed6>,
    pub c_all: Fixed6,
    pub c_best: Fixed6,
    pub pct_rm: Fixed6,
    pub removed: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub timepoint: String,
    #[serde(rename = "Q")]
    pub q: Fixed6,
    pub clusters: Vec<Vec<String>>,
    pub bridging: Vec<BridgingRecord>,
    pub stats: StatsRecord,
}

impl ClusterRecord {
    pub fn new(result: &ClusteringResult, graph: &TemporalGraph, documents: usize) -> Self {
        let s = &result.stats;
        ClusterRecord {
            timepoint: result.timepoint.clone(),
            q: Fixed6(result.modularity),
            clusters: result.clusters.clone(),
            bridging: result
                .bridging_nodes
                .iter()
                .zip(&result.bridging_membership)
                .map(|(token, attached)| BridgingRecord { token: token.clone(), attached: attached.iter().copied().collect() })
                .collect(),
            stats: StatsRecord {
                documents,
                nodes: graph.node_count(),
                edges: graph.edge_count(),
                isolated: graph.isolated().len(),
                c_rm: s.mean_c_removed.map(Fixed6),
                c_all: Fixed6(s.mean_c_all),
                c_best: Fixed6(s.mean_c_best),
                pct_rm: Fixed6(s.pct_removed),
                removed: result.bridging_nodes.len(),
                converged: result.converged,
            },
        }
    }
}

/// Label clusters of the annotated track for one timepoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelClusterRecord {
    pub timepoint: String,
    pub clusters: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointRecord<T> {
    pub t: T,
    pub i: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub from: Option<EndpointRecord<String>>,
    pub to: Option<EndpointRecord<String>>,
    pub kind: String,
    pub fwd: Fixed6,
    pub bwd: Fixed6,
    pub gap: usize,
}

impl TransitionRecord {
    pub fn new(edge: &TransitionEdge, timepoints: &[String]) -> Self {
        let end = |c: Option<ClusterId>| c.map(|c| EndpointRecord { t: timepoints[c.timepoint].clone(), i: c.index });
        TransitionRecord {
            from: end(edge.from),
            to: end(edge.to),
            kind: edge.kind.as_str().to_owned(),
            fwd: Fixed6(edge.overlap_forward),
            bwd: Fixed6(edge.overlap_backward),
            gap: edge.gap,
        }
    }

    /// Inverse of [`TransitionRecord::new`]; `None` when a timepoint label or
    /// kind is unknown.
    pub fn to_edge(&self, timepoints: &[String]) -> Option<TransitionEdge> {
        let end = |e: &Option<EndpointRecord<String>>| -> Option<Option<ClusterId>> {
            match e {
                None => Some(None),
                Some(e) => {
                    let t = timepoints.iter().position(|x| *x == e.t)?;
                    Some(Some(ClusterId { timepoint: t, index: e.i }))
                }
            }
        };
        Some(TransitionEdge {
            from: end(&self.from)?,
            to: end(&self.to)?,
            kind: self.kind.parse::<TransitionKind>().ok()?,
            overlap_forward: self.fwd.0,
            overlap_backward: self.bwd.0,
            gap: self.gap,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub id: usize,
    pub root: EndpointRecord<String>,
    pub clusters: Vec<EndpointRecord<String>>,
    /// Indices into the transition list of the same track.
    pub edges: Vec<usize>,
    pub length: usize,
}

fn endpoint(c: ClusterId, timepoints: &[String]) -> EndpointRecord<String> {
    EndpointRecord { t: timepoints[c.timepoint].clone(), i: c.index }
}

pub fn flow_records(flows: &FlowSet, timepoints: &[String]) -> Vec<FlowRecord> {
    flows
        .flows
        .iter()
        .map(|f| FlowRecord {
            id: f.id,
            root: endpoint(f.root, timepoints),
            clusters: f.clusters.iter().map(|&c| endpoint(c, timepoints)).collect(),
            edges: f.edges.clone(),
            length: f.length,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportRecord {
    pub count: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedTopicRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timepoint: Option<String>,
    pub items: Vec<String>,
    pub support: SupportRecord,
}

impl MergedTopicRecord {
    pub fn new(items: &Itemset, support: Support, timepoint: Option<&str>) -> Self {
        MergedTopicRecord {
            timepoint: timepoint.map(str::to_owned),
            items: items.iter().cloned().collect(),
            support: SupportRecord { count: support.count, total: support.total },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub flow_count: usize,
    pub mean_length: Fixed6,
    pub singleton_count: usize,
}

impl From<FlowSummary> for SummaryRecord {
    fn from(s: FlowSummary) -> Self {
        SummaryRecord { flow_count: s.flow_count, mean_length: Fixed6(s.mean_length), singleton_count: s.singleton_count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub summary: SummaryRecord,
    /// Clusters that belong to no flow.
    pub singletons: Vec<EndpointRecord<String>>,
    pub edge_kinds: std::collections::BTreeMap<String, usize>,
}

impl TrackRecord {
    pub fn new(edges: &[TransitionEdge], flows: &FlowSet, summary: FlowSummary, timepoints: &[String]) -> Self {
        let mut edge_kinds = std::collections::BTreeMap::new();
        for e in edges {
            *edge_kinds.entry(e.kind.as_str().to_owned()).or_insert(0) += 1;
        }
        TrackRecord {
            summary: summary.into(),
            singletons: flows
                .singletons
                .iter()
                .map(|&c| endpoint(c, timepoints)).collect(),
            edge_kinds,
        }
    }
}

/// Edge list dump: `token_a<TAB>token_b<TAB>weight`, rows sorted.
pub fn graph_tsv(graph: &TemporalGraph) -> String {
    let mut rows: Vec<(&str, &str, f64)> = graph
        .edges()
        .map(|(i, j, w)| {
            let (a, b) = (graph.name(i), graph.name(j));
            if a <= b { (a, b, w) } else { (b, a, w) }
        })
        .collect();
    rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let mut out = String::new();
    for (a, b, w) in rows {
        let _ = writeln!(out, "{a}\t{b}\t{w:.6}");
    }
    out
}

fn cell2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".to_owned() } else { s }
}

/// Statistics table with one column per timepoint, two decimals for reals and
/// `-` where no node was removed.
pub fn stats_tsv(records: &[ClusterRecord]) -> String {
    let mut out = String::from("metric");
    for r in records {
        out.push('\t');
        out.push_str(&r.timepoint);
    }
    out.push('\n');
    type Cell = fn(&ClusterRecord) -> String;
    let rows: [(&str, Cell); 8] = [
        ("documents", |r| r.stats.documents.to_string()),
        ("nodes", |r| r.stats.nodes.to_string()),
        ("c_rm", |r| r.stats.c_rm.map(|v| cell2(v.0)).unwrap_or_else(|| "-".into())),
        ("c_all", |r| cell2(r.stats.c_all.0)),
        ("c_best", |r| cell2(r.stats.c_best.0)),
        ("pct_rm", |r| cell2(r.stats.pct_rm.0)),
        ("Q", |r| cell2(r.q.0)),
        ("clusters", |r| r.clusters.len().to_string()),
    ];
    for (name, cell) in rows {
        out.push_str(name);
        for r in records {
            out.push('\t');
            out.push_str(&cell(r));
        }
        out.push('\n');
    }
    out
}

/// Member sets used for matching: core members, plus attached bridging
/// tokens when `include_bridging` is set.
pub fn match_sets(result: &ClusteringResult, include_bridging: bool) -> Vec<BTreeSet<String>> {
    result
        .clusters
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let mut set: BTreeSet<String> = members.iter().cloned().collect();
            if include_bridging {
                set.extend(result.attached_to(c).map(str::to_owned));
            }
            set
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_six_decimals() {
        let json = serde_json::to_string(&vec![Fixed6(0.5), Fixed6(-1e-12), Fixed6(2.0 / 3.0)]).unwrap();
        assert_eq!(json, "[0.500000,0.000000,0.666667]");
        let back: Vec<Fixed6> = serde_json::from_str(&json).unwrap();
        assert_eq!(back[0], Fixed6(0.5));
    }

    #[test]
    fn graph_dump_is_sorted() {
        let g = TemporalGraph::from_edges("t", [("b", "c", 0.25), ("a", "c", 1.0), ("a", "b", 1.0 / 3.0)]);
        assert_eq!(graph_tsv(&g), "a\tb\t0.333333\na\tc\t1.000000\nb\tc\t0.250000\n");
    }

    fn record(tp: &str, c_rm: Option<f64>) -> ClusterRecord {
        ClusterRecord {
            timepoint: tp.into(),
            q: Fixed6(0.4567),
            clusters: vec![vec!["a".into()], vec!["b".into()]],
            bridging: vec![],
            stats: StatsRecord {
                documents: 38,
                nodes: 139,
                edges: 10,
                isolated: 0,
                c_rm: c_rm.map(Fixed6),
                c_all: Fixed6(0.951),
                c_best: Fixed6(0.99),
                pct_rm: Fixed6(7.1942),
                removed: 10,
                converged: true,
            },
        }
    }

    #[test]
    fn stats_table_layout() {
        let t = stats_tsv(&[record("8/19", Some(0.41)), record("8/20", None)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "metric\t8/19\t8/20");
        assert_eq!(lines[1], "documents\t38\t38");
        assert_eq!(lines[3], "c_rm\t0.41\t-");
        assert_eq!(lines[6], "pct_rm\t7.19\t7.19");
        assert_eq!(lines.len(), 9);
        let single = stats_tsv(&[record("8/19", None)]);
        assert!(single.lines().all(|l| l.split('\t').count() == 2));
    }

    #[test]
    fn transition_record_round_trips() {
        let tps = vec!["d0".to_string(), "d1".to_string(), "d2".to_string()];
        let edge = TransitionEdge {
            from: Some(ClusterId { timepoint: 0, index: 1 }),
            to: Some(ClusterId { timepoint: 2, index: 0 }),
            kind: TransitionKind::ReEmerged,
            overlap_forward: 1.0,
            overlap_backward: 0.75,
            gap: 2,
        };
        let rec = TransitionRecord::new(&edge, &tps);
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"from":{"t":"d0","i":1},"to":{"t":"d2","i":0},"kind":"re_emerged","fwd":1.000000,"bwd":0.750000,"gap":2}"#
        );
        let back: TransitionRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_edge(&tps), Some(edge));
    }
}

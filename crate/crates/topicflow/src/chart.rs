//! Cluster progression charts: one column per timepoint, one box per cluster
//! that belongs to a flow, and one arrow per linking transition. The DOT file
//! is the canonical output; the SVG is a fixed grid rendering of the same
//! layout.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use topicflow_core::transitions::{ClusterId, TransitionEdge, TransitionKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub label: String,
    /// All clusters at the timepoint, including those outside any flow.
    pub cluster_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartNode {
    pub id: ClusterId,
    pub flow: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartEdge {
    pub from: ClusterId,
    pub to: ClusterId,
    pub kind: TransitionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartTrack {
    pub title: String,
    pub columns: Vec<Column>,
    /// Ordered by flow, then timepoint, then cluster index.
    pub nodes: Vec<ChartNode>,
    pub edges: Vec<ChartEdge>,
}

impl ChartTrack {
    /// `flows[f]` lists the indices into `edges` belonging to flow `f`.
    pub fn new(
        title: &str,
        timepoints: &[String],
        cluster_counts: &[usize],
        edges: &[TransitionEdge],
        flows: &[Vec<usize>],
        text: impl Fn(ClusterId) -> String,
    ) -> Self {
        let columns = timepoints
            .iter()
            .zip(cluster_counts)
            .map(|(label, &cluster_count)| Column { label: label.clone(), cluster_count })
            .collect();
        let mut nodes = Vec::new();
        let mut chart_edges = Vec::new();
        let mut placed = BTreeSet::new();
        for (flow, members) in flows.iter().enumerate() {
            let linking: Vec<&TransitionEdge> = members
                .iter()
                .map(|&k| &edges[k])
                .filter(|e| e.kind.links_clusters() && e.from.is_some() && e.to.is_some())
                .collect();
            let ids: BTreeSet<ClusterId> = linking.iter().flat_map(|e| [e.from.unwrap(), e.to.unwrap()]).collect();
            for id in ids {
                if placed.insert(id) {
                    nodes.push(ChartNode { id, flow, text: text(id) });
                }
            }
            chart_edges.extend(linking.iter().map(|e| ChartEdge { from: e.from.unwrap(), to: e.to.unwrap(), kind: e.kind }));
        }
        ChartTrack { title: title.to_owned(), columns, nodes, edges: chart_edges }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape_dot(&self.title));
        out.push_str("  rankdir=LR;\n  newrank=true;\n");
        out.push_str("  node [shape=box, fontsize=10, fontname=\"Helvetica\"];\n");
        for (t, col) in self.columns.iter().enumerate() {
            let _ = writeln!(
                out,
                "  \"col{t}\" [shape=plaintext, label=\"{}\\n{}\"];",
                escape_dot(&col.label),
                col.cluster_count
            );
        }
        for t in 1..self.columns.len() {
            let _ = writeln!(out, "  \"col{}\" -> \"col{t}\" [style=invis];", t - 1);
        }
        for node in &self.nodes {
            let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", node_key(node.id), escape_dot(&node.text));
        }
        let mut by_column: BTreeMap<usize, Vec<ClusterId>> = BTreeMap::new();
        for node in &self.nodes {
            by_column.entry(node.id.timepoint).or_default().push(node.id);
        }
        for (t, ids) in &by_column {
            let _ = write!(out, "  {{ rank=same; \"col{t}\";");
            for id in ids {
                let _ = write!(out, " \"{}\";", node_key(*id));
            }
            out.push_str(" }\n");
        }
        for e in &self.edges {
            let (style, color) = edge_style(e.kind);
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [style={style}, color=\"{color}\", tooltip=\"{}\"];",
                node_key(e.from),
                node_key(e.to),
                e.kind
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn to_svg(&self) -> String {
        const LEFT: usize = 20;
        const TOP: usize = 70;
        const COL_W: usize = 170;
        const NODE_W: usize = 140;
        const NODE_H: usize = 24;
        const ROW_H: usize = 34;

        // Each flow gets a band of rows tall enough for its busiest column.
        let mut band_height: BTreeMap<usize, usize> = BTreeMap::new();
        let mut per_column: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut row_of: BTreeMap<ClusterId, usize> = BTreeMap::new();
        for node in &self.nodes {
            let slot = per_column.entry((node.flow, node.id.timepoint)).or_insert(0);
            row_of.insert(node.id, *slot);
            *slot += 1;
            let h = band_height.entry(node.flow).or_insert(0);
            *h = (*h).max(*slot);
        }
        let mut band_start = BTreeMap::new();
        let mut rows = 0;
        for (flow, h) in &band_height {
            band_start.insert(*flow, rows);
            rows += h;
        }
        let pos = |n: &ChartNode| {
            let x = LEFT + n.id.timepoint * COL_W;
            let y = TOP + (band_start[&n.flow] + row_of[&n.id]) * ROW_H;
            (x, y)
        };
        let place: BTreeMap<ClusterId, (usize, usize)> = self.nodes.iter().map(|n| (n.id, pos(n))).collect();

        let width = LEFT * 2 + self.columns.len().max(1) * COL_W;
        let height = TOP + rows.max(1) * ROW_H + 20;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"Helvetica, Arial, sans-serif\">"
        );
        let _ = writeln!(out, "<text x=\"{LEFT}\" y=\"18\" font-size=\"14\" font-weight=\"bold\">{}</text>", escape_xml(&self.title));
        for (t, col) in self.columns.iter().enumerate() {
            let cx = LEFT + t * COL_W + NODE_W / 2;
            let _ = writeln!(out, "<text x=\"{cx}\" y=\"40\" font-size=\"11\" text-anchor=\"middle\">{}</text>", escape_xml(&col.label));
            let _ = writeln!(out, "<text x=\"{cx}\" y=\"56\" font-size=\"11\" text-anchor=\"middle\">{}</text>", col.cluster_count);
        }
        for e in &self.edges {
            let (Some(&(x1, y1)), Some(&(x2, y2))) = (place.get(&e.from), place.get(&e.to)) else {
                continue;
            };
            let (style, color) = edge_style(e.kind);
            let dash = if style == "dashed" { " stroke-dasharray=\"5 4\"" } else { "" };
            let width = if e.kind == TransitionKind::Merged { 2 } else { 1 };
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{x2}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"{width}\"{dash}><title>{}</title></line>",
                x1 + NODE_W,
                y1 + NODE_H / 2,
                y2 + NODE_H / 2,
                e.kind
            );
        }
        for node in &self.nodes {
            let (x, y) = place[&node.id];
            let _ = writeln!(
                out,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{NODE_W}\" height=\"{NODE_H}\" rx=\"3\" fill=\"#f4f4f4\" stroke=\"#555\"/>"
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>",
                x + 4,
                y + 16,
                escape_xml(&truncate(&node.text, 24))
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn node_key(id: ClusterId) -> String {
    format!("t{}_c{}", id.timepoint, id.index)
}

fn edge_style(kind: TransitionKind) -> (&'static str, &'static str) {
    match kind {
        TransitionKind::Unchanged => ("solid", "#333333"),
        TransitionKind::Absorbed => ("solid", "#1f77b4"),
        TransitionKind::Dissolved => ("solid", "#9467bd"),
        TransitionKind::Split => ("solid", "#2ca02c"),
        TransitionKind::Merged => ("bold", "#ff7f0e"),
        TransitionKind::ReEmerged => ("dashed", "#d62728"),
        TransitionKind::Emerged | TransitionKind::Disappeared => ("invis", "#ffffff"),
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        s.to_owned()
    } else {
        let mut t: String = s.chars().take(max - 1).collect();
        t.push('…');
        t
    }
}

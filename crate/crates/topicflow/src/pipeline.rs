//! End-to-end run: corpus, per-timepoint graphs and clustering, transition
//! tracking for the computed track and, when the corpus is annotated, for the
//! label track; then every output file.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;
use topicflow_core::clustering::{find_optimal_clustering, ClusteringResult, OptimalSearch};
use topicflow_core::itemsets::{
    frequent_itemsets, labels_to_timepoint_clusters, merge_subset_itemsets, transactions, Itemset, Support,
};
use topicflow_core::transitions::{flow_summary, trace_transitions, Tracking, TransitionConfig, TransitionEdge};
use topicflow_core::{build_gow, TemporalGraph, TimeSlice};

use crate::chart::ChartTrack;
use crate::corpus::{load_corpus, partition_by_timepoint, Corpus, Format, Granularity};
use crate::formats::{
    flow_records, graph_tsv, match_sets, stats_tsv, ClusterRecord, Fixed6, FlowRecord, LabelClusterRecord,
    MergedTopicRecord, TrackRecord, TransitionRecord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Corpus,
    Clustering,
    Transitions,
    Itemsets,
    Output,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Corpus => "corpus",
            Stage::Clustering => "clustering",
            Stage::Transitions => "transitions",
            Stage::Itemsets => "itemsets",
            Stage::Output => "output",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("[{stage}] {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    fn new(stage: Stage, message: impl fmt::Display) -> Self {
        PipelineError { stage, message: message.to_string() }
    }
}

fn at<E: fmt::Display>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    /// Guessed from the file extension when `None`.
    pub format: Option<Format>,
    pub granularity: Granularity,
    /// Edges need an NPMI strictly above this.
    pub weight_floor: f64,
    pub search: OptimalSearch,
    pub transitions: TransitionConfig,
    /// Defaults to two transactions' worth of support.
    pub min_support: Option<f64>,
    pub per_timepoint_merge: bool,
    pub include_bridging_in_match: bool,
    pub out_dir: PathBuf,
    /// Worker threads for the per-timepoint stage; `TOPICFLOW_THREADS` or all cores when `None`.
    pub threads: Option<usize>,
    pub dump_graphs: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            format: None,
            granularity: Granularity::Day,
            weight_floor: 0.0,
            search: OptimalSearch::default(),
            transitions: TransitionConfig::default(),
            min_support: None,
            per_timepoint_merge: false,
            include_bridging_in_match: false,
            out_dir: out_dir.into(),
            threads: None,
            dump_graphs: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::new(Stage::Config, m));
        if !(-1.0..1.0).contains(&self.weight_floor) {
            return bad(format!("weight floor {} must be in [-1, 1)", self.weight_floor));
        }
        self.search.validate().map_err(at(Stage::Config))?;
        let alpha = self.transitions.alpha;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return bad(format!("alpha {alpha} must be in (0, 1]"));
        }
        if let Some(s) = self.min_support {
            if !(s > 0.0 && s <= 1.0) {
                return bad(format!("min support {s} must be in (0, 1]"));
            }
        }
        if self.threads == Some(0) {
            return bad("thread count must be positive".into());
        }
        Ok(())
    }

    fn thread_count(&self) -> Result<Option<usize>, PipelineError> {
        if self.threads.is_some() {
            return Ok(self.threads);
        }
        match std::env::var("TOPICFLOW_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(PipelineError::new(Stage::Config, format!("TOPICFLOW_THREADS={v:?} is not a positive integer"))),
            },
            Err(_) => Ok(None),
        }
    }
}

/// One timepoint of the computed track.
#[derive(Debug, Clone)]
pub struct SliceAnalysis {
    pub timepoint: String,
    pub documents: usize,
    pub graph: TemporalGraph,
    pub result: ClusteringResult,
    /// Sets handed to the transition engine.
    pub match_sets: Vec<BTreeSet<String>>,
}

/// The label track.
#[derive(Debug, Clone)]
pub struct AnnotatedAnalysis {
    /// Merged topics with the timepoint they were mined on, `None` for global mining.
    pub merged: Vec<(Option<String>, Itemset, Support)>,
    pub clusters: Vec<Vec<BTreeSet<String>>>,
    pub tracking: Tracking,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub timepoints: Vec<String>,
    pub documents: usize,
    pub flagged_documents: usize,
    pub slices: Vec<SliceAnalysis>,
    pub computed: Tracking,
    pub annotated: Option<AnnotatedAnalysis>,
}

/// Runs every algorithmic stage in memory.
pub fn analyze(config: &RunConfig, corpus: &Corpus) -> Result<Analysis, PipelineError> {
    config.validate()?;
    let slices = partition_by_timepoint(corpus, config.granularity);
    let timepoints: Vec<String> = slices.iter().map(|s| s.timepoint.clone()).collect();
    log::info!("{} documents over {} timepoints", corpus.len(), slices.len());

    let analyse_slice = |slice: &TimeSlice| -> Result<SliceAnalysis, PipelineError> {
        let graph = build_gow(slice, config.weight_floor);
        let result = find_optimal_clustering(&graph, &config.search)
            .map_err(|e| PipelineError::new(Stage::Clustering, format!("{}: {e}", slice.timepoint)))?;
        log::debug!(
            "{}: {} nodes, {} clusters, {} removed, Q={:.4}",
            slice.timepoint,
            graph.node_count(),
            result.clusters.len(),
            result.bridging_nodes.len(),
            result.modularity
        );
        Ok(SliceAnalysis {
            timepoint: slice.timepoint.clone(),
            documents: slice.len(),
            match_sets: match_sets(&result, config.include_bridging_in_match),
            graph,
            result,
        })
    };
    let per_slice = || slices.par_iter().map(analyse_slice).collect::<Result<Vec<_>, _>>();
    let analysed = match config.thread_count()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(at(Stage::Config))?
            .install(per_slice)?,
        None => per_slice()?,
    };

    let sets: Vec<Vec<BTreeSet<String>>> = analysed.iter().map(|s| s.match_sets.clone()).collect();
    let computed = trace_transitions(&sets, &config.transitions).map_err(at(Stage::Transitions))?;
    let annotated = if corpus.has_labels() { Some(annotate(config, &slices)?) } else { None };

    Ok(Analysis {
        timepoints,
        documents: corpus.len(),
        flagged_documents: corpus.flagged().count(),
        slices: analysed,
        computed,
        annotated,
    })
}

fn mine(config: &RunConfig, slices: &[TimeSlice]) -> Result<Vec<(Itemset, Support)>, PipelineError> {
    let tx = transactions(slices.iter().flat_map(|s| &s.documents));
    if tx.is_empty() {
        return Ok(Vec::new());
    }
    let min_support = config.min_support.unwrap_or((2.0 / tx.len() as f64).min(1.0));
    let frequent = frequent_itemsets(&tx, min_support).map_err(at(Stage::Itemsets))?;
    let frequent: Vec<(Itemset, Support)> = frequent.into_iter().collect();
    Ok(merge_subset_itemsets(&frequent))
}

fn annotate(config: &RunConfig, slices: &[TimeSlice]) -> Result<AnnotatedAnalysis, PipelineError> {
    let mut merged = Vec::new();
    let clusters = if config.per_timepoint_merge {
        let mut clusters = Vec::with_capacity(slices.len());
        for slice in slices {
            let topics = mine(config, std::slice::from_ref(slice))?;
            let sets: Vec<Itemset> = topics.iter().map(|(s, _)| s.clone()).collect();
            clusters.extend(labels_to_timepoint_clusters(std::slice::from_ref(slice), &sets));
            merged.extend(topics.into_iter().map(|(s, sup)| (Some(slice.timepoint.clone()), s, sup)));
        }
        clusters
    } else {
        let topics = mine(config, slices)?;
        let sets: Vec<Itemset> = topics.iter().map(|(s, _)| s.clone()).collect();
        merged.extend(topics.into_iter().map(|(s, sup)| (None, s, sup)));
        labels_to_timepoint_clusters(slices, &sets)
    };
    let tracking = trace_transitions(&clusters, &config.transitions).map_err(at(Stage::Transitions))?;
    Ok(AnnotatedAnalysis { merged, clusters, tracking })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionsFile {
    pub timepoints: Vec<String>,
    pub edges: Vec<TransitionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowsFile {
    pub flows: Vec<FlowRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub granularity: Granularity,
    pub weight_floor: Fixed6,
    pub expansion: u32,
    pub inflation: Fixed6,
    pub alpha: Fixed6,
    pub max_removal_fraction: Fixed6,
    pub early_stop_patience: usize,
    pub max_gap: Option<usize>,
    pub min_support: Option<Fixed6>,
    pub per_timepoint_merge: bool,
    pub include_bridging_in_match: bool,
}

/// Run summary, also written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigRecord,
    pub timepoints: Vec<String>,
    pub documents: usize,
    /// Documents left without tokens after normalization.
    pub flagged_documents: usize,
    pub computed: TrackRecord,
    pub annotated: Option<TrackRecord>,
}

impl RunReport {
    fn new(config: &RunConfig, analysis: &Analysis) -> Self {
        let tps = &analysis.timepoints;
        let track = |t: &Tracking| TrackRecord::new(&t.edges, &t.flows, flow_summary(&t.flows), tps);
        RunReport {
            config: ConfigRecord {
                granularity: config.granularity,
                weight_floor: Fixed6(config.weight_floor),
                expansion: config.search.mcl.expansion,
                inflation: Fixed6(config.search.mcl.inflation),
                alpha: Fixed6(config.transitions.alpha),
                max_removal_fraction: Fixed6(config.search.max_removal_fraction),
                early_stop_patience: config.search.early_stop_patience,
                max_gap: config.transitions.max_gap,
                min_support: config.min_support.map(Fixed6),
                per_timepoint_merge: config.per_timepoint_merge,
                include_bridging_in_match: config.include_bridging_in_match,
            },
            timepoints: tps.clone(),
            documents: analysis.documents,
            flagged_documents: analysis.flagged_documents,
            computed: track(&analysis.computed),
            annotated: analysis.annotated.as_ref().map(|a| track(&a.tracking)),
        }
    }
}

pub const CLUSTERS: &str = "clusters.json";
pub const TRANSITIONS: &str = "transitions.json";
pub const FLOWS: &str = "flows.json";
pub const MERGED_TOPICS: &str = "merged_topics.json";
pub const STATS: &str = "stats.tsv";
pub const REPORT: &str = "report.json";
pub const ANNOTATED_CLUSTERS: &str = "annotated_clusters.json";
pub const ANNOTATED_TRANSITIONS: &str = "transitions_annotated.json";
pub const ANNOTATED_FLOWS: &str = "flows_annotated.json";

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, PipelineError> {
    let mut s = serde_json::to_string_pretty(value).map_err(at(Stage::Output))?;
    s.push('\n');
    Ok(s)
}

fn tracking_files(tracking: &Tracking, timepoints: &[String]) -> (TransitionsFile, FlowsFile) {
    (
        TransitionsFile {
            timepoints: timepoints.to_vec(),
            edges: tracking.edges.iter().map(|e| TransitionRecord::new(e, timepoints)).collect(),
        },
        FlowsFile { flows: flow_records(&tracking.flows, timepoints) },
    )
}

/// Builds the chart of one track from its saved records.
pub fn chart_from_records(
    title: &str,
    clusters: &[Vec<Vec<String>>],
    transitions: &TransitionsFile,
    flows: &FlowsFile,
) -> Result<ChartTrack, String> {
    let tps = &transitions.timepoints;
    if clusters.len() != tps.len() {
        return Err(format!("{} cluster lists for {} timepoints", clusters.len(), tps.len()));
    }
    let edges: Vec<TransitionEdge> = transitions
        .edges
        .iter()
        .map(|r| r.to_edge(tps).ok_or_else(|| format!("transition record {r:?} does not resolve")))
        .collect::<Result<_, _>>()?;
    for e in &edges {
        for c in e.from.iter().chain(&e.to) {
            if c.index >= clusters[c.timepoint].len() {
                return Err(format!("transition refers to missing cluster {} of {}", c.index, tps[c.timepoint]));
            }
        }
    }
    let flow_edges: Vec<Vec<usize>> = flows.flows.iter().map(|f| f.edges.clone()).collect();
    if let Some(k) = flow_edges.iter().flatten().find(|&&k| k >= edges.len()) {
        return Err(format!("flow refers to missing transition {k}"));
    }
    let counts: Vec<usize> = clusters.iter().map(Vec::len).collect();
    Ok(ChartTrack::new(title, tps, &counts, &edges, &flow_edges, |c| {
        clusters[c.timepoint][c.index].join(", ")
    }))
}

pub const COMPUTED_TITLE: &str = "(a) computed clusters";
pub const ANNOTATED_TITLE: &str = "(b) annotated topics";

/// Every output file as (relative path, contents), in write order.
pub fn render(config: &RunConfig, analysis: &Analysis) -> Result<Vec<(PathBuf, String)>, PipelineError> {
    let tps = &analysis.timepoints;
    let mut files = Vec::new();
    let records: Vec<ClusterRecord> =
        analysis.slices.iter().map(|s| ClusterRecord::new(&s.result, &s.graph, s.documents)).collect();
    files.push((CLUSTERS.into(), to_json(&records)?));
    files.push((STATS.into(), stats_tsv(&records)));

    let (transitions, flows) = tracking_files(&analysis.computed, tps);
    files.push((TRANSITIONS.into(), to_json(&transitions)?));
    files.push((FLOWS.into(), to_json(&flows)?));
    let cluster_lists: Vec<Vec<Vec<String>>> = records.iter().map(|r| r.clusters.clone()).collect();
    let chart = chart_from_records(COMPUTED_TITLE, &cluster_lists, &transitions, &flows).map_err(at(Stage::Output))?;
    files.push(("progression_computed.dot".into(), chart.to_dot()));
    files.push(("progression_computed.svg".into(), chart.to_svg()));

    let merged: Vec<MergedTopicRecord> = analysis
        .annotated
        .iter()
        .flat_map(|a| &a.merged)
        .map(|(tp, items, sup)| MergedTopicRecord::new(items, *sup, tp.as_deref()))
        .collect();
    files.push((MERGED_TOPICS.into(), to_json(&merged)?));

    // Without labels the annotated chart is the bare date axis.
    let empty = vec![Vec::new(); tps.len()];
    let (label_lists, transitions, flows) = match &analysis.annotated {
        Some(a) => {
            let lists: Vec<Vec<Vec<String>>> =
                a.clusters.iter().map(|cs| cs.iter().map(|c| c.iter().cloned().collect()).collect()).collect();
            let label_records: Vec<LabelClusterRecord> = tps
                .iter()
                .zip(&lists)
                .map(|(tp, cs)| LabelClusterRecord { timepoint: tp.clone(), clusters: cs.clone() })
                .collect();
            files.push((ANNOTATED_CLUSTERS.into(), to_json(&label_records)?));
            let (transitions, flows) = tracking_files(&a.tracking, tps);
            files.push((ANNOTATED_TRANSITIONS.into(), to_json(&transitions)?));
            files.push((ANNOTATED_FLOWS.into(), to_json(&flows)?));
            (lists, transitions, flows)
        }
        None => (empty, TransitionsFile { timepoints: tps.clone(), edges: Vec::new() }, FlowsFile { flows: Vec::new() }),
    };
    let chart = chart_from_records(ANNOTATED_TITLE, &label_lists, &transitions, &flows).map_err(at(Stage::Output))?;
    files.push(("progression_annotated.dot".into(), chart.to_dot()));
    files.push(("progression_annotated.svg".into(), chart.to_svg()));

    if config.dump_graphs {
        for s in &analysis.slices {
            files.push((Path::new("graphs").join(format!("{}.tsv", s.timepoint)), graph_tsv(&s.graph)));
        }
    }
    files.push((REPORT.into(), to_json(&RunReport::new(config, analysis))?));
    Ok(files)
}

/// Writes `files` under `dir`. On failure everything written so far is
/// removed again, including directories this call created.
pub fn write_all(dir: &Path, files: &[(PathBuf, String)]) -> Result<(), PipelineError> {
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> std::io::Result<()> {
        for (rel, contents) in files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                let mut missing = Vec::new();
                let mut p = parent;
                while !p.as_os_str().is_empty() && !p.exists() {
                    missing.push(p.to_path_buf());
                    match p.parent() {
                        Some(up) => p = up,
                        None => break,
                    }
                }
                fs::create_dir_all(parent)?;
                created_dirs.extend(missing.into_iter().rev());
            }
            fs::write(&path, contents)?;
            written.push(path);
        }
        Ok(())
    })();
    if let Err(e) = result {
        for path in &written {
            let _ = fs::remove_file(path);
        }
        for d in created_dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
        return Err(PipelineError::new(Stage::Output, format!("{}: {e}", dir.display())));
    }
    Ok(())
}

/// Loads the corpus, analyses it and writes every output under `config.out_dir`.
pub fn run(config: &RunConfig) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let format = config.format.unwrap_or_else(|| Format::from_path(&config.input));
    let corpus = load_corpus(&config.input, format).map_err(at(Stage::Corpus))?;
    let flagged = corpus.flagged().count();
    if flagged > 0 {
        log::warn!("{flagged} documents have no tokens after normalization");
    }
    let analysis = analyze(config, &corpus)?;
    let files = render(config, &analysis)?;
    write_all(&config.out_dir, &files)?;
    Ok(RunReport::new(config, &analysis))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Re-renders both progression charts of an output directory from its saved
/// records.
pub fn rerender_charts(dir: &Path) -> anyhow::Result<()> {
    let records: Vec<ClusterRecord> = read_json(&dir.join(CLUSTERS))?;
    let clusters: Vec<Vec<Vec<String>>> = records.into_iter().map(|r| r.clusters).collect();
    let transitions: TransitionsFile = read_json(&dir.join(TRANSITIONS))?;
    let flows: FlowsFile = read_json(&dir.join(FLOWS))?;
    let computed = chart_from_records(COMPUTED_TITLE, &clusters, &transitions, &flows).map_err(anyhow::Error::msg)?;

    let annotated = if dir.join(ANNOTATED_CLUSTERS).exists() {
        let labels: Vec<LabelClusterRecord> = read_json(&dir.join(ANNOTATED_CLUSTERS))?;
        let lists: Vec<Vec<Vec<String>>> = labels.into_iter().map(|r| r.clusters).collect();
        let transitions: TransitionsFile = read_json(&dir.join(ANNOTATED_TRANSITIONS))?;
        let flows: FlowsFile = read_json(&dir.join(ANNOTATED_FLOWS))?;
        chart_from_records(ANNOTATED_TITLE, &lists, &transitions, &flows)
    } else {
        let empty = vec![Vec::new(); transitions.timepoints.len()];
        let none = TransitionsFile { timepoints: transitions.timepoints.clone(), edges: Vec::new() };
        chart_from_records(ANNOTATED_TITLE, &empty, &none, &FlowsFile { flows: Vec::new() })
    }
    .map_err(anyhow::Error::msg)?;

    let files = vec![
        ("progression_computed.dot".into(), computed.to_dot()),
        ("progression_computed.svg".into(), computed.to_svg()),
        ("progression_annotated.dot".into(), annotated.to_dot()),
        ("progression_annotated.svg".into(), annotated.to_svg()),
    ];
    write_all(dir, &files)?;
    Ok(())
}

//! Allocation-only algorithms for tracing how topics in a time-sliced
//! document stream emerge, split, merge, disappear and re-emerge.
//!
//! The pipeline is three stages, each usable on its own:
//!
//! 1. [`gow`] turns a [`TimeSlice`] into an undirected word graph weighted by
//!    normalized pointwise mutual information.
//! 2. [`clustering`] runs Markov clustering inside a loop that strips
//!    low-clustering-coefficient bridging nodes and keeps the first
//!    modularity maximum.
//! 3. [`transitions`] classifies how clusters at consecutive timepoints
//!    relate, links re-emerging clusters across gaps, and groups the result
//!    into flows.
//!
//! [`itemsets`] turns per-document annotation labels into topic sets so the
//! same transition engine can run over human annotations.
//!
//! The crate is `no_std`; it needs only `alloc`. File formats, calendar
//! bucketing and the CLI live in the `topicflow` companion crate.
#![no_std]

extern crate alloc;

pub mod clustering;
pub mod corpus;
pub mod error;
pub mod gow;
pub mod graph;
pub mod itemsets;
pub mod mcl;
pub mod transitions;

pub use clustering::{
    clustering_coefficient, find_optimal_clustering, modularity, ClusteringResult, OptimalSearch,
    SliceStats,
};
pub use corpus::{normalize_token, Document, TimeSlice};
pub use error::Error;
pub use gow::{build_gow, count_cooccurrence, npmi, pmi, CooccurrenceTable};
pub use graph::TemporalGraph;
pub use itemsets::{
    frequent_itemsets, labels_to_timepoint_clusters, merge_subset_itemsets, support,
    LabelTransaction, Support,
};
pub use mcl::{mcl, MclClustering, MclParams};
pub use transitions::{
    build_flows, classify_step, detect_reemergence, flow_summary, overlap, trace_transitions,
    ClusterId, ClusterRef, Flow, FlowSet, FlowSummary, TransitionConfig, TransitionEdge,
    TransitionKind, Tracking,
};

pub type Result<T> = core::result::Result<T, Error>;

//! Corpus ingestion, output formats, progression charts, the synthetic
//! planted-schedule generator and the end-to-end pipeline behind the
//! `topicflow` CLI. The algorithms themselves live in `topicflow-core`.

pub mod chart;
pub mod corpus;
pub mod formats;
pub mod pipeline;
pub mod synth;

pub use corpus::{load_corpus, partition_by_timepoint, Corpus, CorpusError, Format, Granularity};
pub use pipeline::{run, PipelineError, RunConfig, RunReport, Stage};

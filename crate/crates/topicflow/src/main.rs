use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use topicflow::corpus::write_corpus;
use topicflow::formats::{stats_tsv, ClusterRecord};
use topicflow::pipeline::{read_json, rerender_charts};
use topicflow::synth::{Schedule, TruthFile};
use topicflow::{run, Format, Granularity, RunConfig};

#[derive(Parser)]
#[command(name = "topicflow", version, about = "Trace topic transitions through a time-stamped document stream")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster every timepoint, trace transitions and write all outputs.
    Run(RunArgs),
    /// Generate a corpus from a planted topic schedule.
    Synth(SynthArgs),
    /// Recompute the statistics table from a saved clusters.json.
    Stats {
        #[arg(long)]
        clusters: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render the progression charts of an output directory.
    Chart {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// jsonl or tsv; guessed from the extension by default.
    #[arg(long)]
    format: Option<Format>,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    inflation: f64,
    #[arg(long, default_value_t = 2)]
    expansion: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    weight_floor: f64,
    #[arg(long, default_value_t = Granularity::Day)]
    granularity: Granularity,
    #[arg(long)]
    max_gap: Option<usize>,
    #[arg(long)]
    min_support: Option<f64>,
    #[arg(long)]
    include_bridging_in_match: bool,
    /// Stop the removal search after this many non-improving steps; 0 never stops early.
    #[arg(long, default_value_t = 0)]
    patience: usize,
    #[arg(long, default_value_t = 0.5)]
    max_removal_fraction: f64,
    /// Mine label itemsets per timepoint instead of over the whole corpus.
    #[arg(long)]
    per_timepoint_merge: bool,
    /// Also write each timepoint's graph under graphs/.
    #[arg(long)]
    dump_graphs: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Where to write the ground-truth transitions.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// JSON schedule; the built-in six-topic schedule by default.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Overrides the schedule's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run_config(a: RunArgs) -> RunConfig {
    let mut c = RunConfig::new(a.input, a.out);
    c.format = a.format;
    c.granularity = a.granularity;
    c.weight_floor = a.weight_floor;
    c.search.mcl.inflation = a.inflation;
    c.search.mcl.expansion = a.expansion;
    c.search.max_removal_fraction = a.max_removal_fraction;
    c.search.early_stop_patience = a.patience;
    c.transitions.alpha = a.alpha;
    c.transitions.max_gap = a.max_gap;
    c.min_support = a.min_support;
    c.include_bridging_in_match = a.include_bridging_in_match;
    c.per_timepoint_merge = a.per_timepoint_merge;
    c.dump_graphs = a.dump_graphs;
    c.threads = a.threads;
    c
}

fn synth(a: SynthArgs) -> anyhow::Result<()> {
    let mut schedule = match &a.schedule {
        Some(path) => read_json::<Schedule>(path)?,
        None => Schedule::planted(),
    };
    if let Some(seed) = a.seed {
        schedule.seed = seed;
    }
    let corpus = schedule.generate()?;
    let mut out = io::BufWriter::new(
        fs::File::create(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?,
    );
    write_corpus(&corpus, &mut out, Format::from_path(&a.out))?;
    out.flush()?;
    if let Some(path) = &a.truth {
        let truth = TruthFile { seed: schedule.seed, edges: schedule.ground_truth()?, schedule };
        fs::write(path, serde_json::to_string_pretty(&truth)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    log::info!("wrote {} documents to {}", corpus.len(), a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(&run_config(args)).map(|_| ()).map_err(anyhow::Error::from),
        Command::Synth(args) => synth(args),
        Command::Stats { clusters, out } => read_json::<Vec<ClusterRecord>>(&clusters).and_then(|records| {
            let table = stats_tsv(&records);
            match out {
                Some(path) => fs::write(&path, table).with_context(|| format!("cannot write {}", path.display())),
                None => io::stdout().write_all(table.as_bytes()).map_err(Into::into),
            }
        }),
        Command::Chart { dir } => rerender_charts(&dir),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("topicflow: {e:#}");
            ExitCode::FAILURE
        }
    }
}

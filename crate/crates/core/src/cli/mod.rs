//! `citecentral` command line: one subcommand per pipeline stage.
//!
//! Exit codes: 0 on success, 1 on a runtime error (a JSON record goes to
//! stderr), 2 on a usage error.

mod artifacts;
mod config;
mod pipeline;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use artifacts::{sha256_hex, write_atomic, ArtifactWriter, MANIFEST};
pub use config::{
    AggregationSection, CentralitySection, CorrelationSet, DataSection, GraphSection, InputSection, LrtSpec,
    ModelSpec, PredictSection, RegressionSection, ReportSection, RunConfig, TableSpec, TuningSection,
};
pub use pipeline::Pipeline;
pub use report::{correlation_matrix, window_table};

use crate::error::Result;
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "citecentral", version, about = "Co-authorship centrality features and citation-percentile models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON-lines corpus (overrides `input.corpus`).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Comma-separated venues kept at ingest.
    #[arg(long, global = true, value_delimiter = ',')]
    pub venue: Option<Vec<String>>,
    /// Comma-separated window lengths.
    #[arg(long, global = true, value_delimiter = ',')]
    pub window: Option<Vec<i32>>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the corpus and write the venue-filtered copy.
    Ingest,
    /// Same-year citation percentiles.
    Percentiles,
    /// Graph summaries and edge-list snapshots.
    Graph,
    /// Centrality scores for every metric, window and year.
    Centrality,
    /// Paper-level aggregates of every metric.
    Aggregate,
    /// Design matrices of the configured models.
    Features,
    /// Fit the configured models.
    Fit,
    /// Likelihood ratio tests between configured models.
    Lrt,
    /// Grid searches over HCTCD, PageRank and tau parameters.
    Tune,
    /// Held-out comparison of the two predict feature sets.
    Predict,
    /// Correlation and regression tables.
    Report,
    /// Every stage in order.
    Pipeline,
    /// Write a seeded synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 300)]
        papers: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write the default configuration.
    InitConfig {
        #[arg(long)]
        output: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Percentiles => "percentiles",
            Command::Graph => "graph",
            Command::Centrality => "centrality",
            Command::Aggregate => "aggregate",
            Command::Features => "features",
            Command::Fit => "fit",
            Command::Lrt => "lrt",
            Command::Tune => "tune",
            Command::Predict => "predict",
            Command::Report => "report",
            Command::Pipeline => "pipeline",
            Command::Synth { .. } => "synth",
            Command::InitConfig { .. } => "init-config",
        }
    }
}

fn load_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(input) = &g.input {
        cfg.input.corpus = Some(input.clone());
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(v) = &g.venue {
        cfg.data.venues = v.clone();
    }
    if let Some(w) = &g.window {
        cfg.graph.windows = w.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth { papers, output } => {
            let corpus = generate(&SynthConfig {
                n_papers: *papers,
                seed: g.seed.unwrap_or(SynthConfig::default().seed),
                ..SynthConfig::default()
            })?;
            let mut bytes = Vec::new();
            corpus.write_jsonl(&mut bytes)?;
            write_atomic(output, &bytes)?;
            println!("{} papers -> {}", corpus.len(), output.display());
            return Ok(());
        }
        Command::InitConfig { output } => {
            let cfg = load_config(g)?;
            write_atomic(output, cfg.to_toml()?.as_bytes())?;
            println!("config {} -> {}", cfg.hash()?, output.display());
            return Ok(());
        }
        _ => {}
    }
    let cfg = load_config(g)?;
    let mut p = Pipeline::open(cfg, &g.out)?;
    match cli.command {
        Command::Ingest => p.ingest()?,
        Command::Percentiles => p.percentiles()?,
        Command::Graph => p.graphs()?,
        Command::Centrality => p.centrality()?,
        Command::Aggregate => p.aggregate()?,
        Command::Features => p.features()?,
        Command::Fit => p.fit()?,
        Command::Lrt => p.lrt()?,
        Command::Tune => {
            p.tune()?;
        }
        Command::Predict => p.predict()?,
        Command::Report => p.report()?,
        Command::Pipeline => p.run_all()?,
        Command::Synth { .. } | Command::InitConfig { .. } => unreachable!("handled above"),
    }
    println!("config {} -> {}", p.config_hash(), g.out.display());
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = if cli.global.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let record = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "command": cli.command.name(),
            });
            eprintln!("{record}");
            1
        }
    }
}

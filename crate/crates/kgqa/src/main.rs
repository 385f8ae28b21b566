//! Thin command-line front end over [`kgqa::cli`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kgqa::cli::{cmd_eval, cmd_oracle, cmd_run, MatcherSelector, PlannerSelector, RunConfig};
use kgqa::matching::MatchThresholds;
use kgqa::metrics::{FlopsEstimator, ModelProfile};

#[derive(Parser)]
#[command(name = "kgqa", about = "Plan-driven question answering over knowledge graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Triples file (TSV: head, relation, tail)
    #[arg(long)]
    graph: PathBuf,
    /// Metadata file (TSV: id, label, comma-separated fine types, description)
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Planner backend: scripted:PATH or remote
    #[arg(long, default_value = "remote")]
    planner: String,
    /// Matcher backend: table:PATH, lexical, or remote
    #[arg(long, default_value = "lexical")]
    matcher: String,
    /// Maximum forward hops executed per plan
    #[arg(long, default_value_t = 3)]
    depth_cap: usize,
    /// Maximum tails expanded per admitted relation
    #[arg(long, default_value_t = 8)]
    branch_threshold: usize,
    /// Fine-level match threshold
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Coarse-level match threshold
    #[arg(long, default_value_t = 0.8)]
    tau_coarse: f64,
    /// Reflection cap for single-hop plans
    #[arg(long, default_value_t = 5)]
    max_reflections_single: u32,
    /// Reflection cap for multi-hop plans
    #[arg(long, default_value_t = 10)]
    max_reflections_multi: u32,
    /// Seed recorded for reproducibility; offline runs are deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a line-delimited trace of every decision to this path
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Worker threads for dataset evaluation
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Declared planner-model parameter count for FLOPs estimates
    #[arg(long, default_value_t = 175e9)]
    planner_params: f64,
    /// Declared matcher-model parameter count for FLOPs estimates
    #[arg(long, default_value_t = 355e6)]
    matcher_params: f64,
    /// Declared tokens consumed per matcher invocation
    #[arg(long, default_value_t = 128)]
    matcher_tokens_per_call: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Answer a single question and print the result document
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// The question to answer
        question: String,
    },
    /// Evaluate a line-delimited dataset and print the metrics report
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Dataset path (one JSON record per line)
        dataset: PathBuf,
    },
    /// Exhaustively enumerate paths with the brute-force oracle
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated seed entity ids
        #[arg(long)]
        seeds: String,
        /// Exact path length in hops
        #[arg(long)]
        depth: usize,
        /// Keep only terminals carrying this type label (or one beneath it)
        #[arg(long)]
        type_filter: Option<String>,
    },
}

fn build_config(common: &CommonArgs) -> kgqa::Result<RunConfig> {
    let mut config = RunConfig::new(
        &common.graph,
        PlannerSelector::parse(&common.planner)?,
        MatcherSelector::parse(&common.matcher)?,
    );
    config.meta_path = common.meta.clone();
    config.depth_cap = common.depth_cap;
    config.branch_threshold = Some(common.branch_threshold);
    config.thresholds = MatchThresholds {
        tau: common.tau,
        tau_coarse: common.tau_coarse,
    };
    config.max_reflections_single = common.max_reflections_single;
    config.max_reflections_multi = common.max_reflections_multi;
    config.seed = common.seed;
    config.trace_path = common.trace.clone();
    config.workers = common.workers;
    config.estimator = FlopsEstimator {
        planner: ModelProfile::new("planner-estimate", common.planner_params)?,
        matcher: ModelProfile::new("matcher-estimate", common.matcher_params)?,
        matcher_tokens_per_call: common.matcher_tokens_per_call,
    };
    config.validate()?;
    Ok(config)
}

fn run() -> kgqa::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { common, question } => {
            let config = build_config(&common)?;
            let document = cmd_run(&config, &question)?;
            print!("{}", document.to_json());
        }
        Command::Eval { common, dataset } => {
            let config = build_config(&common)?;
            let report = cmd_eval(&config, &dataset)?;
            print!("{}", report.to_json());
        }
        Command::Oracle {
            common,
            seeds,
            depth,
            type_filter,
        } => {
            let config = build_config(&common)?;
            let seeds: Vec<String> = seeds
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            let document = cmd_oracle(&config, &seeds, depth, type_filter.as_deref())?;
            print!("{}", document.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

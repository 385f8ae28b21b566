//! Command entry points: single-question runs, dataset evaluation, and
//! oracle enumeration. The `kgqa` binary is a thin argument parser over
//! these functions.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{load_graph, EntityId, KnowledgeGraph, Triple};
use crate::matching::{
    LexicalMatcher, MatchThresholds, Matcher, RemoteMatcher, TableMatcher, TypeTaxonomy,
};
use crate::metrics::{
    cost_efficiency, hits_at_1, pruning_recall, brute_force_paths, FlopsEstimator, OracleConfig,
    TripleSeq,
};
use crate::plan::{Planner, RemotePlanner, ScriptedPlanner};
use crate::reflect::{run_pipeline, PipelineConfig, PipelineOutcome, PipelineRun};
use crate::trace::TraceWriter;

/// Backend selection for planning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "path", rename_all = "snake_case")]
pub enum PlannerSelector {
    Scripted(PathBuf),
    Remote,
}

impl PlannerSelector {
    /// Parse `scripted:PATH` or `remote`.
    pub fn parse(text: &str) -> Result<Self> {
        if text == "remote" {
            return Ok(PlannerSelector::Remote);
        }
        if let Some(path) = text.strip_prefix("scripted:") {
            if path.is_empty() {
                return Err(Error::Config("scripted planner needs a path".to_string()));
            }
            return Ok(PlannerSelector::Scripted(PathBuf::from(path)));
        }
        Err(Error::Config(format!(
            "unknown planner selector {text:?}; expected scripted:PATH or remote"
        )))
    }
}

/// Backend selection for matching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "path", rename_all = "snake_case")]
pub enum MatcherSelector {
    Table(PathBuf),
    Lexical,
    Remote,
}

impl MatcherSelector {
    /// Parse `table:PATH`, `lexical`, or `remote`.
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "lexical" => return Ok(MatcherSelector::Lexical),
            "remote" => return Ok(MatcherSelector::Remote),
            _ => {}
        }
        if let Some(path) = text.strip_prefix("table:") {
            if path.is_empty() {
                return Err(Error::Config("table matcher needs a path".to_string()));
            }
            return Ok(MatcherSelector::Table(PathBuf::from(path)));
        }
        Err(Error::Config(format!(
            "unknown matcher selector {text:?}; expected table:PATH, lexical, or remote"
        )))
    }
}

/// Everything a run needs. All randomness flows from `seed`; offline
/// backends are deterministic regardless and record the seed for
/// reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub graph_path: PathBuf,
    pub meta_path: Option<PathBuf>,
    pub planner: PlannerSelector,
    pub matcher: MatcherSelector,
    pub depth_cap: usize,
    /// `None` is unbounded.
    pub branch_threshold: Option<usize>,
    pub thresholds: MatchThresholds,
    pub max_reflections_single: u32,
    pub max_reflections_multi: u32,
    pub seed: u64,
    pub trace_path: Option<PathBuf>,
    pub workers: usize,
    pub estimator: FlopsEstimator,
}

impl RunConfig {
    pub fn new(
        graph_path: impl Into<PathBuf>,
        planner: PlannerSelector,
        matcher: MatcherSelector,
    ) -> Self {
        RunConfig {
            graph_path: graph_path.into(),
            meta_path: None,
            planner,
            matcher,
            depth_cap: 3,
            branch_threshold: Some(8),
            thresholds: MatchThresholds::default(),
            max_reflections_single: 5,
            max_reflections_multi: 10,
            seed: 0,
            trace_path: None,
            workers: 1,
            estimator: FlopsEstimator::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth_cap == 0 {
            return Err(Error::Config("depth cap must be at least 1".to_string()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".to_string()));
        }
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            explore: crate::explore::ExploreConfig {
                depth_cap: self.depth_cap,
                branch_threshold: self.branch_threshold,
                include_incoming: false,
            },
            max_reflections_single: self.max_reflections_single,
            max_reflections_multi: self.max_reflections_multi,
            seed: self.seed,
            estimator: self.estimator.clone(),
        }
    }

    pub fn load_graph(&self) -> Result<KnowledgeGraph> {
        load_graph(&self.graph_path, self.meta_path.as_deref())
    }

    pub fn build_planner(&self) -> Result<Box<dyn Planner>> {
        Ok(match &self.planner {
            PlannerSelector::Scripted(path) => Box::new(ScriptedPlanner::from_path(path)?),
            PlannerSelector::Remote => Box::new(RemotePlanner::from_env()?),
        })
    }

    pub fn build_matcher(&self) -> Result<Box<dyn Matcher>> {
        Ok(match &self.matcher {
            MatcherSelector::Table(path) => Box::new(TableMatcher::from_path(path)?),
            MatcherSelector::Lexical => Box::new(LexicalMatcher::new(
                TypeTaxonomy::builtin().clone(),
                self.thresholds,
            )),
            MatcherSelector::Remote => Box::new(RemoteMatcher::from_env()?),
        })
    }
}

/// Echo of the effective configuration, embedded in result documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub planner: PlannerSelector,
    pub matcher: MatcherSelector,
    pub depth_cap: usize,
    pub branch_threshold: Option<usize>,
    pub tau: f64,
    pub tau_coarse: f64,
    pub max_reflections_single: u32,
    pub max_reflections_multi: u32,
    pub seed: u64,
}

impl ConfigEcho {
    fn from_config(config: &RunConfig) -> Self {
        ConfigEcho {
            planner: config.planner.clone(),
            matcher: config.matcher.clone(),
            depth_cap: config.depth_cap,
            branch_threshold: config.branch_threshold,
            tau: config.thresholds.tau,
            tau_coarse: config.thresholds.tau_coarse,
            max_reflections_single: config.max_reflections_single,
            max_reflections_multi: config.max_reflections_multi,
            seed: config.seed,
        }
    }
}

/// Result document for one question run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub query: String,
    /// `answered` or `failed`.
    pub status: String,
    pub run: PipelineRun,
    pub config: ConfigEcho,
}

impl ResultDocument {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }
}

/// Run one question end to end. Unanswerable questions and reflection
/// exhaustion complete orderly (exit status 0 at the binary level);
/// configuration and file errors surface as `Err`.
pub fn cmd_run(config: &RunConfig, question: &str) -> Result<ResultDocument> {
    config.validate()?;
    let graph = config.load_graph()?;
    let planner = config.build_planner()?;
    let matcher = config.build_matcher()?;
    let trace = match &config.trace_path {
        Some(path) => Some(TraceWriter::to_file(path, config.estimator.clone())?),
        None => None,
    };
    let run = run_pipeline(
        &graph,
        planner.as_ref(),
        matcher.as_ref(),
        question,
        &config.pipeline_config(),
        trace.as_ref(),
    )?;
    if let Some(writer) = &trace {
        writer.finish()?;
    }
    let status = match &run.outcome {
        PipelineOutcome::Answered { .. } => "answered",
        PipelineOutcome::Failed { .. } => "failed",
    };
    Ok(ResultDocument {
        query: question.to_string(),
        status: status.to_string(),
        run,
        config: ConfigEcho::from_config(config),
    })
}

/// One dataset record: a question with its gold answers and optional gold
/// paths (each path a list of [head, relation, tail] triples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub question: String,
    #[serde(default)]
    pub gold_answers: Vec<EntityId>,
    #[serde(default)]
    pub gold_paths: Option<Vec<Vec<[String; 3]>>>,
}

impl DatasetRecord {
    pub fn gold_triple_seqs(&self) -> Option<Vec<TripleSeq>> {
        self.gold_paths.as_ref().map(|paths| {
            paths
                .iter()
                .map(|p| {
                    p.iter()
                        .map(|[h, r, t]| Triple::new(h.clone(), r.clone(), t.clone()))
                        .collect()
                })
                .collect()
        })
    }
}

/// Per-question entry in the metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionMetrics {
    pub question: String,
    /// `answered`, `failed`, or `error`.
    pub status: String,
    pub hits_at_1: u32,
    pub llm_calls: u64,
    pub flops_estimate: f64,
    pub pruning_recall: Option<f64>,
    pub cost_efficiency: Option<f64>,
    pub final_entities: Vec<EntityId>,
    pub reflections: u32,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub questions: usize,
    pub answered: usize,
    pub hits_at_1: f64,
    pub avg_llm_calls: f64,
    pub avg_flops_estimate: f64,
    /// Mean over questions with gold paths; absent when none carry them.
    pub avg_pruning_recall: Option<f64>,
    pub avg_cost_efficiency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub questions: Vec<QuestionMetrics>,
    pub aggregate: AggregateMetrics,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Evaluate a line-delimited dataset. Questions are processed independently
/// (concurrently when `workers > 1`); per-question failures — including
/// malformed lines — are recorded and never abort the batch. Output order
/// follows input order.
pub fn cmd_eval(config: &RunConfig, dataset_path: &Path) -> Result<MetricsReport> {
    config.validate()?;
    let graph = Arc::new(config.load_graph()?);
    let planner: Arc<dyn Planner> = Arc::from(config.build_planner()?);
    let matcher: Arc<dyn Matcher> = Arc::from(config.build_matcher()?);
    let content =
        std::fs::read_to_string(dataset_path).map_err(|e| Error::io(dataset_path, e))?;

    let lines: Vec<(usize, String)> = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();

    let pipeline_cfg = config.pipeline_config();
    let evaluate = |(line_no, line): &(usize, String)| -> QuestionMetrics {
        let record: DatasetRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                return QuestionMetrics {
                    question: format!("<line {line_no}>"),
                    status: "error".to_string(),
                    hits_at_1: 0,
                    llm_calls: 0,
                    flops_estimate: 0.0,
                    pruning_recall: None,
                    cost_efficiency: None,
                    final_entities: vec![],
                    reflections: 0,
                    error: Some(format!("malformed dataset line: {e}")),
                };
            }
        };
        match run_pipeline(
            &graph,
            planner.as_ref(),
            matcher.as_ref(),
            &record.question,
            &pipeline_cfg,
            None,
        ) {
            Ok(run) => question_metrics(&record, &run),
            Err(e) => QuestionMetrics {
                question: record.question.clone(),
                status: "error".to_string(),
                hits_at_1: 0,
                llm_calls: 0,
                flops_estimate: 0.0,
                pruning_recall: None,
                cost_efficiency: None,
                final_entities: vec![],
                reflections: 0,
                error: Some(e.to_string()),
            },
        }
    };

    let questions: Vec<QuestionMetrics> = if config.workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| lines.par_iter().map(evaluate).collect())
    } else {
        lines.iter().map(evaluate).collect()
    };

    let aggregate = aggregate_metrics(&questions);
    Ok(MetricsReport { questions, aggregate })
}

fn question_metrics(record: &DatasetRecord, run: &PipelineRun) -> QuestionMetrics {
    let final_entities = run
        .answer()
        .map(|a| a.final_entities.clone())
        .unwrap_or_default();
    let gold: BTreeSet<EntityId> = record.gold_answers.iter().cloned().collect();
    let hits = hits_at_1(&final_entities, &gold);
    let recall = record.gold_triple_seqs().and_then(|gold_paths| {
        let returned = run
            .iterations
            .last()
            .map(|it| it.result.paths.as_slice())
            .unwrap_or(&[]);
        pruning_recall(returned, &gold_paths).ok()
    });
    let flops = run.ledger.flops_estimate;
    let efficiency = recall.and_then(|r| cost_efficiency(r, flops).ok());
    QuestionMetrics {
        question: record.question.clone(),
        status: match &run.outcome {
            PipelineOutcome::Answered { .. } => "answered".to_string(),
            PipelineOutcome::Failed { .. } => "failed".to_string(),
        },
        hits_at_1: hits,
        llm_calls: run.ledger.llm_calls,
        flops_estimate: flops,
        pruning_recall: recall,
        cost_efficiency: efficiency,
        final_entities,
        reflections: run.reflections(),
        error: None,
    }
}

fn aggregate_metrics(questions: &[QuestionMetrics]) -> AggregateMetrics {
    let n = questions.len().max(1) as f64;
    let answered = questions.iter().filter(|q| q.status == "answered").count();
    let hits: u32 = questions.iter().map(|q| q.hits_at_1).sum();
    let calls: u64 = questions.iter().map(|q| q.llm_calls).sum();
    let flops: f64 = questions.iter().map(|q| q.flops_estimate).sum();
    let recalls: Vec<f64> = questions.iter().filter_map(|q| q.pruning_recall).collect();
    let efficiencies: Vec<f64> = questions.iter().filter_map(|q| q.cost_efficiency).collect();
    let mean = |values: &[f64]| -> Option<f64> {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    AggregateMetrics {
        questions: questions.len(),
        answered,
        hits_at_1: hits as f64 / n,
        avg_llm_calls: calls as f64 / n,
        avg_flops_estimate: flops / n,
        avg_pruning_recall: mean(&recalls),
        avg_cost_efficiency: mean(&efficiencies),
    }
}

/// Path listing produced by the oracle command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDocument {
    pub seeds: Vec<EntityId>,
    pub depth: usize,
    pub type_filter: Option<String>,
    pub count: usize,
    pub paths: Vec<Vec<[String; 3]>>,
}

impl OracleDocument {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }
}

/// Exhaustively enumerate paths with the brute-force oracle. The optional
/// type filter keeps terminals carrying the label or any label beneath it.
pub fn cmd_oracle(
    config: &RunConfig,
    seeds: &[EntityId],
    depth: usize,
    type_filter: Option<&str>,
) -> Result<OracleDocument> {
    let graph = config.load_graph()?;
    let oracle_cfg = OracleConfig::default();
    let paths = brute_force_paths(
        &graph,
        seeds,
        depth,
        |entity| match type_filter {
            None => true,
            Some(filter) => entity
                .fine_types
                .iter()
                .any(|t| crate::matching::taxonomy::is_under(t, filter)),
        },
        &oracle_cfg,
    )?;
    let rendered: Vec<Vec<[String; 3]>> = paths
        .iter()
        .map(|seq| {
            seq.iter()
                .map(|t| [t.head.clone(), t.relation.clone(), t.tail.clone()])
                .collect()
        })
        .collect();
    Ok(OracleDocument {
        seeds: seeds.to_vec(),
        depth,
        type_filter: type_filter.map(String::from),
        count: rendered.len(),
        paths: rendered,
    })
}

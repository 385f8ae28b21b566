//! Reflection stage: verify reasoning paths, aggregate per-seed results into
//! an answer or a clue prompt, and drive the bounded replanning loop.
//!
//! An iteration is satisfactory exactly when aggregation yields an answer
//! set (high or low confidence); otherwise the clue prompt feeds one plan
//! revision, up to a per-hop-class reflection cap (one sub-question uses the
//! single-hop cap, more use the multi-hop cap). Every iteration costs one
//! aggregate backend call and every revision one more, so the ledger obeys
//! `llm_calls = 1 + #aggregates + #revisions` for a completed run.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::{
    explore_seed, ExplorationResult, ExploreConfig, ProblemReport, ReasoningPath,
};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::matching::{counted_match, MatchKind, Matcher};
use crate::metrics::{CostLedger, FlopsEstimator, LedgerSnapshot};
use crate::plan::{revise_plan, AggregateContext, CluePrompt, Plan, Planner};
use crate::trace::{EventKind, TraceBuffer, TraceWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    /// Final entities validated from every seed (intersection).
    High,
    /// Union fallback: validated somewhere, but not from every seed.
    Low,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSet {
    /// Ranked by best supporting path score, ties by entity id.
    pub final_entities: Vec<EntityId>,
    /// Validated paths backing each final entity.
    pub supporting_paths: BTreeMap<EntityId, Vec<ReasoningPath>>,
    pub confidence: Confidence,
}

/// Outcome of one aggregation pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregation {
    Answer(AnswerSet),
    Clues(CluePrompt),
}

/// One completed loop iteration; exactly one of `answer`/`clues` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub plan: Plan,
    pub result: ExplorationResult,
    pub answer: Option<AnswerSet>,
    pub clues: Option<CluePrompt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// No seed entity resolvable in the graph.
    Unanswerable,
    /// A backend failed hard after retries.
    BackendFailure,
    /// The reflection cap was reached without a validated answer.
    ReflectionExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub kind: FailureKind,
    pub reason: String,
    /// Problems from the last completed iteration.
    pub problems: Vec<ProblemReport>,
    /// Clue prompts accumulated across failed iterations.
    pub clue_history: Vec<CluePrompt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PipelineOutcome {
    Answered {
        answer: AnswerSet,
        answer_text: String,
    },
    Failed {
        failure: FailureReport,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub query: String,
    pub outcome: PipelineOutcome,
    pub iterations: Vec<IterationRecord>,
    pub ledger: LedgerSnapshot,
}

impl PipelineRun {
    pub fn answer(&self) -> Option<&AnswerSet> {
        match &self.outcome {
            PipelineOutcome::Answered { answer, .. } => Some(answer),
            PipelineOutcome::Failed { .. } => None,
        }
    }

    pub fn failure(&self) -> Option<&FailureReport> {
        match &self.outcome {
            PipelineOutcome::Failed { failure } => Some(failure),
            PipelineOutcome::Answered { .. } => None,
        }
    }

    /// Number of plan revisions performed.
    pub fn reflections(&self) -> u32 {
        self.iterations.last().map(|r| r.iteration).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub explore: ExploreConfig,
    pub max_reflections_single: u32,
    pub max_reflections_multi: u32,
    /// Recorded for reproducibility; offline backends are deterministic
    /// regardless.
    pub seed: u64,
    pub estimator: FlopsEstimator,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            explore: ExploreConfig::default(),
            max_reflections_single: 5,
            max_reflections_multi: 10,
            seed: 0,
            estimator: FlopsEstimator::default(),
        }
    }
}

/// True when every recorded qualifier check on the path matched and the
/// terminal entity satisfies the final constraint (checked through the
/// matcher against the last sub-question's expected answer). Backend
/// failures during the terminal check count as unverified, never as
/// silently matched.
pub fn verify_path(
    path: &ReasoningPath,
    plan: &Plan,
    g: &KnowledgeGraph,
    matcher: &dyn Matcher,
    ledger: &CostLedger,
) -> bool {
    verify_path_detail(path, plan, g, matcher, ledger).verified
}

struct Verification {
    verified: bool,
    reason: Option<String>,
}

fn verify_path_detail(
    path: &ReasoningPath,
    plan: &Plan,
    g: &KnowledgeGraph,
    matcher: &dyn Matcher,
    ledger: &CostLedger,
) -> Verification {
    for step in &path.steps {
        for check in &step.qualifier_checks {
            if !check.verdict.matched {
                return Verification {
                    verified: false,
                    reason: Some(format!(
                        "qualifier {} unmatched at {}",
                        check.qualifier,
                        step.target()
                    )),
                };
            }
        }
    }
    let Some(last_forward) = plan.forward_instructions().into_iter().last() else {
        return Verification {
            verified: false,
            reason: Some("plan has no forward instructions".to_string()),
        };
    };
    let Some(answer) = plan.answer_for(last_forward.sub_question) else {
        return Verification {
            verified: false,
            reason: Some("plan has no final simulated answer".to_string()),
        };
    };
    let Some(terminal) = g.entity(&path.terminal) else {
        return Verification {
            verified: false,
            reason: Some(format!("terminal {} not in graph", path.terminal)),
        };
    };
    match counted_match(
        matcher,
        ledger,
        MatchKind::Forward { sub_question: last_forward.sub_question },
        terminal,
        answer,
        &plan.final_constraint,
    ) {
        Ok(verdict) if verdict.matched => Verification {
            verified: true,
            reason: None,
        },
        Ok(_) => Verification {
            verified: false,
            reason: Some(format!(
                "terminal {} failed the final constraint",
                path.terminal
            )),
        },
        Err(e) => Verification {
            verified: false,
            reason: Some(format!(
                "terminal check backend failure at {}: {e}",
                path.terminal
            )),
        },
    }
}

/// Validated path view recorded in trace aggregate events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedPathRecord {
    pub seed: EntityId,
    pub terminal: EntityId,
    pub score: f64,
    pub triples: Vec<Triple>,
}

/// Aggregate per-seed exploration results under a plan: intersect validated
/// terminal sets across seeds (high confidence), fall back to the ranked
/// union (low confidence), or build a clue prompt from the collected
/// problems when nothing validates.
pub fn aggregate(
    g: &KnowledgeGraph,
    results: &[ExplorationResult],
    plan: &Plan,
    matcher: &dyn Matcher,
    ledger: &CostLedger,
) -> Result<Aggregation> {
    Ok(aggregate_detailed(g, results, plan, matcher, ledger)?.0)
}

fn aggregate_detailed(
    g: &KnowledgeGraph,
    results: &[ExplorationResult],
    plan: &Plan,
    matcher: &dyn Matcher,
    ledger: &CostLedger,
) -> Result<(Aggregation, Vec<ValidatedPathRecord>)> {
    if results.len() != plan.seed_entities.len() {
        return Err(Error::Precondition(format!(
            "aggregate needs one result per seed: {} results for {} seeds",
            results.len(),
            plan.seed_entities.len()
        )));
    }

    let mut validated: Vec<&ReasoningPath> = Vec::new();
    let mut failed: Vec<(&ReasoningPath, String)> = Vec::new();
    for result in results {
        for path in &result.paths {
            let verdict = verify_path_detail(path, plan, g, matcher, ledger);
            if verdict.verified {
                validated.push(path);
            } else {
                failed.push((
                    path,
                    verdict.reason.unwrap_or_else(|| "unverified".to_string()),
                ));
            }
        }
    }

    let records: Vec<ValidatedPathRecord> = validated
        .iter()
        .map(|p| ValidatedPathRecord {
            seed: p.seed.clone(),
            terminal: p.terminal.clone(),
            score: p.score,
            triples: p.triples(),
        })
        .collect();

    if !validated.is_empty() {
        let mut per_seed: BTreeMap<&str, BTreeSet<&str>> = plan
            .seed_entities
            .iter()
            .map(|s| (s.as_str(), BTreeSet::new()))
            .collect();
        let mut best_score: BTreeMap<&str, f64> = BTreeMap::new();
        for path in &validated {
            per_seed
                .entry(path.seed.as_str())
                .or_default()
                .insert(path.terminal.as_str());
            let best = best_score.entry(path.terminal.as_str()).or_insert(path.score);
            if path.score > *best {
                *best = path.score;
            }
        }
        let mut sets = per_seed.values();
        let first = sets.next().cloned().unwrap_or_default();
        let intersection: BTreeSet<&str> =
            sets.fold(first, |acc, s| acc.intersection(s).cloned().collect());
        let (chosen, confidence) = if intersection.is_empty() {
            let union: BTreeSet<&str> = per_seed.values().flatten().cloned().collect();
            (union, Confidence::Low)
        } else {
            (intersection, Confidence::High)
        };
        let mut ranked: Vec<&str> = chosen.into_iter().collect();
        ranked.sort_by(|a, b| {
            let sa = best_score.get(a).copied().unwrap_or(0.0);
            let sb = best_score.get(b).copied().unwrap_or(0.0);
            sb.total_cmp(&sa).then_with(|| a.cmp(b))
        });
        let final_entities: Vec<EntityId> = ranked.into_iter().map(String::from).collect();
        let mut supporting_paths: BTreeMap<EntityId, Vec<ReasoningPath>> = BTreeMap::new();
        for path in &validated {
            if final_entities.contains(&path.terminal) {
                supporting_paths
                    .entry(path.terminal.clone())
                    .or_default()
                    .push((*path).clone());
            }
        }
        let answer = AnswerSet {
            final_entities,
            supporting_paths,
            confidence,
        };
        return Ok((Aggregation::Answer(answer), records));
    }

    // Nothing validated: assemble the clue prompt for replanning.
    let mut summaries = Vec::new();
    let mut digests = Vec::new();
    for result in results {
        for problem in &result.problems {
            summaries.push(format!(
                "{} at {} (hop {}): {}",
                problem_kind_name(problem),
                problem.at_entity,
                problem.at_depth,
                problem.note
            ));
            digests.push(digest_graph(&problem.subgraph));
        }
    }
    for (path, reason) in &failed {
        summaries.push(format!(
            "path {} -> {} failed verification: {reason}",
            path.seed, path.terminal
        ));
        if let Ok(sub) = g.extract_subgraph(&BTreeSet::from([path.terminal.clone()]), 1) {
            digests.push(digest_graph(&sub));
        }
    }
    if summaries.is_empty() {
        // No paths and no recorded problems (for example, every branch ended
        // on an already-visited entity). Give the planner the seeds' own
        // surroundings to work with.
        let depth = plan.forward_instructions().len();
        for seed in &plan.seed_entities {
            summaries.push(format!(
                "exploration from {seed} produced no candidate path of depth {depth}"
            ));
            if let Ok(sub) = g.extract_subgraph(&BTreeSet::from([seed.clone()]), 1) {
                digests.push(digest_graph(&sub));
            }
        }
    }
    let clues = CluePrompt {
        problem_summaries: summaries,
        subgraph_digests: digests,
    };
    Ok((Aggregation::Clues(clues), records))
}

fn problem_kind_name(problem: &ProblemReport) -> String {
    serde_json::to_value(problem.kind)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_else(|| format!("{:?}", problem.kind))
}

/// Compact one-line serialization of a subgraph for clue prompts.
pub fn digest_graph(g: &KnowledgeGraph) -> String {
    const MAX_TRIPLES: usize = 12;
    let entities: Vec<&str> = g.entities().map(|e| e.id.as_str()).collect();
    let mut triples: Vec<String> = g
        .triples()
        .iter()
        .take(MAX_TRIPLES)
        .map(|t| t.to_string())
        .collect();
    let extra = g.triple_count().saturating_sub(MAX_TRIPLES);
    if extra > 0 {
        triples.push(format!("(+{extra} more)"));
    }
    format!(
        "entities: {}; triples: {}",
        entities.join(", "),
        triples.join(" | ")
    )
}

/// Full loop: plan once, then explore / aggregate / revise until an answer
/// or the reflection cap. Always returns the ledger and the complete
/// iteration history; backend failures and unanswerable questions surface as
/// failure reports, not errors.
pub fn run_pipeline(
    g: &KnowledgeGraph,
    planner: &dyn Planner,
    matcher: &dyn Matcher,
    query: &str,
    cfg: &PipelineConfig,
    trace: Option<&TraceWriter>,
) -> Result<PipelineRun> {
    let ledger = CostLedger::new();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut clue_history: Vec<CluePrompt> = Vec::new();

    let finish = |outcome: PipelineOutcome,
                  iterations: Vec<IterationRecord>,
                  ledger: &CostLedger|
     -> PipelineRun {
        PipelineRun {
            query: query.to_string(),
            outcome,
            iterations,
            ledger: ledger.snapshot(&cfg.estimator),
        }
    };
    let fail = |kind: FailureKind,
                reason: String,
                problems: Vec<ProblemReport>,
                clue_history: Vec<CluePrompt>,
                iterations: Vec<IterationRecord>,
                ledger: &CostLedger,
                trace: Option<&TraceWriter>|
     -> Result<PipelineRun> {
        emit_answer_event(trace, &iterations, ledger, "failed", &[], None)?;
        Ok(finish(
            PipelineOutcome::Failed {
                failure: FailureReport {
                    kind,
                    reason,
                    problems,
                    clue_history,
                },
            },
            iterations,
            ledger,
        ))
    };

    let mut plan = match planner.initial_plan(query, &ledger) {
        Ok(plan) => plan,
        Err(Error::EmptyPlan(msg)) => {
            return fail(
                FailureKind::Unanswerable,
                msg,
                vec![],
                clue_history,
                iterations,
                &ledger,
                trace,
            );
        }
        Err(e) => {
            return fail(
                FailureKind::BackendFailure,
                format!("planning failed: {e}"),
                vec![],
                clue_history,
                iterations,
                &ledger,
                trace,
            );
        }
    };

    let mut reflections: u32 = 0;
    loop {
        // keep only seeds that resolve in the graph
        let resolved: Vec<EntityId> = plan
            .seed_entities
            .iter()
            .filter(|s| g.contains_entity(s))
            .cloned()
            .collect();
        if resolved.is_empty() {
            return fail(
                FailureKind::Unanswerable,
                format!(
                    "no seed entity resolvable in the graph: {:?}",
                    plan.seed_entities
                ),
                vec![],
                clue_history,
                iterations,
                &ledger,
                trace,
            );
        }
        plan.seed_entities = resolved;
        if let Err(e) = plan.validate() {
            return fail(
                FailureKind::BackendFailure,
                format!("backend produced an invalid plan: {e}"),
                vec![],
                clue_history,
                iterations,
                &ledger,
                trace,
            );
        }

        if let Some(writer) = trace {
            writer.emit(
                plan.iteration,
                EventKind::Plan,
                serde_json::to_value(&plan).expect("plan serializes"),
                &ledger,
            )?;
        }

        // per-seed exploration; buffers are flushed in seed order so traces
        // stay deterministic whatever the execution schedule
        let mut results = Vec::with_capacity(plan.seed_entities.len());
        for seed in &plan.seed_entities {
            let buffer = TraceBuffer::new();
            let seed_trace = trace.map(|_| &buffer);
            let result = explore_seed(g, &plan, seed, matcher, &ledger, &cfg.explore, seed_trace)?;
            if let Some(writer) = trace {
                writer.flush_buffer(plan.iteration, &buffer, &ledger)?;
            }
            results.push(result);
        }
        let merged = ExplorationResult::merge(results.clone());

        let (aggregation, validated_records) =
            aggregate_detailed(g, &results, &plan, matcher, &ledger)?;

        // aggregate-stage backend call, once per iteration
        let ctx = aggregate_context(&aggregation, &validated_records);
        let answer_text = match planner.render_aggregate(query, &ctx, &ledger) {
            Ok(text) => text,
            Err(e) => {
                return fail(
                    FailureKind::BackendFailure,
                    format!("aggregate rendering failed: {e}"),
                    merged.problems,
                    clue_history,
                    iterations,
                    &ledger,
                    trace,
                );
            }
        };

        if let Some(writer) = trace {
            writer.emit(
                plan.iteration,
                EventKind::Aggregate,
                aggregate_event_payload(&aggregation, &validated_records),
                &ledger,
            )?;
        }

        match aggregation {
            Aggregation::Answer(answer) => {
                iterations.push(IterationRecord {
                    iteration: plan.iteration,
                    plan: plan.clone(),
                    result: merged,
                    answer: Some(answer.clone()),
                    clues: None,
                });
                emit_answer_event(
                    trace,
                    &iterations,
                    &ledger,
                    "answered",
                    &answer.final_entities,
                    Some(answer.confidence),
                )?;
                if let Some(writer) = trace {
                    writer.finish()?;
                }
                return Ok(finish(
                    PipelineOutcome::Answered { answer, answer_text },
                    iterations,
                    &ledger,
                ));
            }
            Aggregation::Clues(clues) => {
                iterations.push(IterationRecord {
                    iteration: plan.iteration,
                    plan: plan.clone(),
                    result: merged.clone(),
                    answer: None,
                    clues: Some(clues.clone()),
                });
                clue_history.push(clues.clone());

                let cap = if plan.sub_question_count() == 1 {
                    cfg.max_reflections_single
                } else {
                    cfg.max_reflections_multi
                };
                if reflections >= cap {
                    let run = fail(
                        FailureKind::ReflectionExhausted,
                        format!("no validated answer after {reflections} reflections (cap {cap})"),
                        merged.problems,
                        clue_history,
                        iterations,
                        &ledger,
                        trace,
                    );
                    if let Some(writer) = trace {
                        writer.finish()?;
                    }
                    return run;
                }
                if let Some(writer) = trace {
                    writer.emit(
                        plan.iteration,
                        EventKind::Reflect,
                        serde_json::json!({
                            "next_iteration": plan.iteration + 1,
                            "problem_summaries": clues.problem_summaries.len(),
                            "subgraph_digests": clues.subgraph_digests.len(),
                        }),
                        &ledger,
                    )?;
                }
                plan = match revise_plan(planner, query, &plan, &clues, &ledger) {
                    Ok(next) => next,
                    Err(e) => {
                        return fail(
                            FailureKind::BackendFailure,
                            format!("plan revision failed: {e}"),
                            merged.problems,
                            clue_history,
                            iterations,
                            &ledger,
                            trace,
                        );
                    }
                };
                reflections += 1;
            }
        }
    }
}

fn aggregate_context(
    aggregation: &Aggregation,
    validated: &[ValidatedPathRecord],
) -> AggregateContext {
    match aggregation {
        Aggregation::Answer(answer) => AggregateContext {
            answered: true,
            final_entities: answer.final_entities.clone(),
            confidence: Some(confidence_name(answer.confidence).to_string()),
            summary_lines: validated
                .iter()
                .map(|v| format!("{} -> {} (score {:.4})", v.seed, v.terminal, v.score))
                .collect(),
        },
        Aggregation::Clues(clues) => AggregateContext {
            answered: false,
            final_entities: vec![],
            confidence: None,
            summary_lines: clues.problem_summaries.clone(),
        },
    }
}

fn aggregate_event_payload(
    aggregation: &Aggregation,
    validated: &[ValidatedPathRecord],
) -> serde_json::Value {
    match aggregation {
        Aggregation::Answer(answer) => serde_json::json!({
            "outcome": "answer",
            "validated": validated,
            "final": answer.final_entities,
            "confidence": confidence_name(answer.confidence),
        }),
        Aggregation::Clues(clues) => serde_json::json!({
            "outcome": "clues",
            "validated": validated,
            "problem_summaries": clues.problem_summaries.len(),
            "subgraph_digests": clues.subgraph_digests.len(),
        }),
    }
}

fn confidence_name(confidence: Confidence) -> &'static str {
    match confidence {
        Confidence::High => "high",
        Confidence::Low => "low",
    }
}

fn emit_answer_event(
    trace: Option<&TraceWriter>,
    iterations: &[IterationRecord],
    ledger: &CostLedger,
    status: &str,
    final_entities: &[EntityId],
    confidence: Option<Confidence>,
) -> Result<()> {
    if let Some(writer) = trace {
        let iteration = iterations.last().map(|r| r.iteration).unwrap_or(0);
        writer.emit(
            iteration,
            EventKind::Answer,
            serde_json::json!({
                "status": status,
                "final_entities": final_entities,
                "confidence": confidence.map(confidence_name),
            }),
            ledger,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::explore::kg_explore;
    use crate::matching::{MatchVerdict, TableEntry, TableMatcher};
    use crate::plan::{generate_instructions, SimulatedAnswer, SubQuestion};

    fn graph(triples: &[(&str, &str, &str)]) -> KnowledgeGraph {
        KnowledgeGraph::from_parts(
            [],
            triples
                .iter()
                .map(|(h, r, t)| Triple::new(*h, *r, *t))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    fn plan_one_hop(seeds: &[&str]) -> Plan {
        generate_instructions(
            seeds.iter().map(|s| s.to_string()).collect(),
            vec![SubQuestion { index: 1, text: "which target".to_string() }],
            vec![],
            BTreeMap::from([(
                1,
                SimulatedAnswer {
                    text: "guess".to_string(),
                    expected_types: BTreeSet::from(["other".to_string()]),
                },
            )]),
        )
        .unwrap()
    }

    fn table(entries: &[(&str, usize, bool, f64)]) -> TableMatcher {
        TableMatcher::from_entries(entries.iter().map(|(e, sq, m, s)| {
            (
                (e.to_string(), *sq),
                TableEntry { matched: *m, score: *s },
            )
        }))
    }

    fn explore_per_seed(
        g: &KnowledgeGraph,
        plan: &Plan,
        matcher: &dyn Matcher,
        ledger: &CostLedger,
    ) -> Vec<ExplorationResult> {
        plan.seed_entities
            .iter()
            .map(|s| {
                explore_seed(g, plan, s, matcher, ledger, &ExploreConfig::default(), None).unwrap()
            })
            .collect()
    }

    #[test]
    fn verify_path_all_checks_pass() {
        let g = graph(&[("a", "r", "b")]);
        let plan = plan_one_hop(&["a"]);
        let m = table(&[("b", 1, true, 1.0)]);
        let ledger = CostLedger::new();
        let result = kg_explore(&g, &plan, &m, &ledger, &ExploreConfig::default(), None).unwrap();
        assert!(verify_path(&result.paths[0], &plan, &g, &m, &ledger));
    }

    #[test]
    fn verify_path_single_failing_qualifier_check() {
        let g = graph(&[("a", "r", "b")]);
        let plan = plan_one_hop(&["a"]);
        let m = table(&[("b", 1, true, 1.0)]);
        let ledger = CostLedger::new();
        let result = kg_explore(&g, &plan, &m, &ledger, &ExploreConfig::default(), None).unwrap();
        let mut path = result.paths[0].clone();
        path.steps[0].qualifier_checks.push(crate::explore::QualifierCheck {
            qualifier: 1,
            verdict: MatchVerdict::unmatched("scripted failure"),
        });
        assert!(!verify_path(&path, &plan, &g, &m, &ledger));
    }

    #[test]
    fn verify_path_agrees_with_raw_verdict_reevaluation() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let g = graph(&[("a", "r", "b")]);
        let plan = plan_one_hop(&["a"]);
        let m = table(&[("b", 1, true, 1.0)]);
        let ledger = CostLedger::new();
        let base = kg_explore(&g, &plan, &m, &ledger, &ExploreConfig::default(), None)
            .unwrap()
            .paths[0]
            .clone();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let mut path = base.clone();
            // random qualifier-check pattern
            let n = rng.gen_range(0..4);
            for q in 0..n {
                let matched = rng.gen_bool(0.5);
                path.steps[0].qualifier_checks.push(crate::explore::QualifierCheck {
                    qualifier: q + 1,
                    verdict: if matched {
                        MatchVerdict {
                            matched: true,
                            score: 1.0,
                            type_overlap: BTreeSet::new(),
                            rationale: String::new(),
                        }
                    } else {
                        MatchVerdict::unmatched("injected")
                    },
                });
            }
            let expected = path
                .steps
                .iter()
                .flat_map(|s| &s.qualifier_checks)
                .all(|c| c.verdict.matched); // terminal check passes in this fixture
            assert_eq!(verify_path(&path, &plan, &g, &m, &ledger), expected);
        }
    }

    #[test]
    fn aggregate_two_seed_intersection_is_high() {
        let g = graph(&[
            ("s1", "r", "x"),
            ("s1", "r", "y"),
            ("s2", "r", "y"),
            ("s2", "r", "z"),
        ]);
        let plan = plan_one_hop(&["s1", "s2"]);
        let m = table(&[
            ("x", 1, true, 1.0),
            ("y", 1, true, 0.9),
            ("z", 1, true, 0.8),
        ]);
        let ledger = CostLedger::new();
        let results = explore_per_seed(&g, &plan, &m, &ledger);
        let agg = aggregate(&g, &results, &plan, &m, &ledger).unwrap();
        match agg {
            Aggregation::Answer(answer) => {
                assert_eq!(answer.final_entities, vec!["y".to_string()]);
                assert_eq!(answer.confidence, Confidence::High);
                assert!(answer.supporting_paths["y"].len() >= 2);
            }
            Aggregation::Clues(_) => panic!("expected an answer"),
        }
    }

    #[test]
    fn aggregate_singleton_seed_is_high() {
        let g = graph(&[("s1", "r", "c")]);
        let plan = plan_one_hop(&["s1"]);
        let m = table(&[("c", 1, true, 1.0)]);
        let ledger = CostLedger::new();
        let results = explore_per_seed(&g, &plan, &m, &ledger);
        match aggregate(&g, &results, &plan, &m, &ledger).unwrap() {
            Aggregation::Answer(answer) => {
                assert_eq!(answer.final_entities, vec!["c".to_string()]);
                assert_eq!(answer.confidence, Confidence::High);
            }
            Aggregation::Clues(_) => panic!("expected an answer"),
        }
    }

    #[test]
    fn aggregate_disjoint_seeds_fall_back_to_ranked_union() {
        let g = graph(&[("s1", "r", "p"), ("s2", "r", "q")]);
        let plan = plan_one_hop(&["s1", "s2"]);
        let m = table(&[("p", 1, true, 0.7), ("q", 1, true, 0.9)]);
        let ledger = CostLedger::new();
        let results = explore_per_seed(&g, &plan, &m, &ledger);
        match aggregate(&g, &results, &plan, &m, &ledger).unwrap() {
            Aggregation::Answer(answer) => {
                assert_eq!(answer.confidence, Confidence::Low);
                // ranked by best path score, then id
                assert_eq!(
                    answer.final_entities,
                    vec!["q".to_string(), "p".to_string()]
                );
            }
            Aggregation::Clues(_) => panic!("expected a low-confidence answer"),
        }
    }

    #[test]
    fn aggregate_without_validated_paths_builds_clues() {
        let g = graph(&[("s1", "r", "d1"), ("s2", "r", "d2")]);
        let plan = plan_one_hop(&["s1", "s2"]);
        let m = table(&[]); // nothing matches: two dead frontiers
        let ledger = CostLedger::new();
        let results = explore_per_seed(&g, &plan, &m, &ledger);
        match aggregate(&g, &results, &plan, &m, &ledger).unwrap() {
            Aggregation::Clues(clues) => {
                assert_eq!(clues.problem_summaries.len(), 2);
                assert_eq!(clues.subgraph_digests.len(), 2);
                assert!(clues.problem_summaries[0].contains("unmatched_path"));
            }
            Aggregation::Answer(_) => panic!("expected clues"),
        }
    }

    #[test]
    fn aggregate_result_count_mismatch_is_precondition() {
        let g = graph(&[("s1", "r", "x")]);
        let plan = plan_one_hop(&["s1"]);
        let m = table(&[]);
        let ledger = CostLedger::new();
        assert!(matches!(
            aggregate(&g, &[], &plan, &m, &ledger),
            Err(Error::Precondition(_))
        ));
    }
}

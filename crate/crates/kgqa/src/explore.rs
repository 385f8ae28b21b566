//! Plan execution: constrained breadth-first search with semantic pruning,
//! branching control, and qualifier checks.
//!
//! Forward-search instruction `i` governs hop `i`. At every frontier entity,
//! each relation is judged once through its representative tail (the tail
//! with maximal out-degree, ties broken by smallest id): a matched
//! representative admits the relation and exploration extends to all its
//! tails, an unmatched one prunes the relation outright. Admitted tails
//! beyond the branching threshold are truncated to the top scorers, and every
//! admitted entity is checked against the qualifiers attached to the current
//! sub-question. Qualifier failures never prune mid-exploration; they ride
//! along on the path and are enforced at aggregation, which keeps the
//! evidence available for clue prompts.
//!
//! Exploration is sequential and fully deterministic for the offline
//! matchers: fixed graph, plan, and configuration reproduce the identical
//! result, including problem ordering.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{Direction, Entity, EntityId, KnowledgeGraph, Triple};
use crate::matching::{counted_match, MatchKind, MatchVerdict, Matcher};
use crate::metrics::CostLedger;
use crate::plan::{Instruction, Plan, SimulatedAnswer};
use crate::trace::{EventKind, TraceBuffer};

/// Runtime limits for one exploration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreConfig {
    /// Maximum number of forward hops executed, whatever the plan asks for.
    pub depth_cap: usize,
    /// Maximum tails expanded per admitted relation; `None` is unbounded.
    pub branch_threshold: Option<usize>,
    /// Also traverse incoming edges (recorded as reversed steps). Off by
    /// default; the oracle-equivalence contract covers outgoing-only runs.
    pub include_incoming: bool,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            depth_cap: 3,
            branch_threshold: Some(8),
            include_incoming: false,
        }
    }
}

/// One traversed edge with the verdict that admitted its relation and the
/// qualifier checks run on the entity stepped onto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub triple: Triple,
    /// True when the step traversed the triple tail-to-head (incoming mode).
    #[serde(default)]
    pub reversed: bool,
    /// Verdict of the representative match that admitted this relation.
    pub verdict: MatchVerdict,
    pub qualifier_checks: Vec<QualifierCheck>,
}

impl PathStep {
    /// Entity this step arrived at, honoring direction.
    pub fn target(&self) -> &EntityId {
        if self.reversed {
            &self.triple.head
        } else {
            &self.triple.tail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualifierCheck {
    pub qualifier: usize,
    pub verdict: MatchVerdict,
}

/// A chain of steps from a seed entity to a terminal entity, scored by the
/// product of its step scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub seed: EntityId,
    pub steps: Vec<PathStep>,
    pub terminal: EntityId,
    pub score: f64,
}

impl ReasoningPath {
    /// Triple sequence identity, used for ordering and recall.
    pub fn triples(&self) -> Vec<Triple> {
        self.steps.iter().map(|s| s.triple.clone()).collect()
    }
}

/// What went wrong, with enough context for replanning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    UnmatchedPath,
    ExcessiveBranching,
    QualifierFailure,
    DepthExhausted,
    BackendFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemReport {
    pub kind: ProblemKind,
    pub at_entity: EntityId,
    /// Hop index at which the problem surfaced.
    pub at_depth: usize,
    /// Radius-1 extract around `at_entity`, fed into clue prompts.
    pub subgraph: KnowledgeGraph,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationResult {
    pub paths: Vec<ReasoningPath>,
    pub problems: Vec<ProblemReport>,
    /// Frontier items whose relations were evaluated.
    pub expansion_count: u64,
    /// Relations discarded because their representative did not match (or
    /// its match call failed outright).
    pub prune_count: u64,
    /// Relations admitted for expansion.
    pub admitted_count: u64,
}

impl ExplorationResult {
    fn empty() -> Self {
        ExplorationResult {
            paths: Vec::new(),
            problems: Vec::new(),
            expansion_count: 0,
            prune_count: 0,
            admitted_count: 0,
        }
    }

    /// Merge per-seed results into one deterministic view: paths ordered by
    /// (seed, triple sequence), problems by (depth, entity, kind).
    pub fn merge(results: impl IntoIterator<Item = ExplorationResult>) -> Self {
        let mut merged = ExplorationResult::empty();
        for r in results {
            merged.paths.extend(r.paths);
            merged.problems.extend(r.problems);
            merged.expansion_count += r.expansion_count;
            merged.prune_count += r.prune_count;
            merged.admitted_count += r.admitted_count;
        }
        sort_paths(&mut merged.paths);
        sort_problems(&mut merged.problems);
        merged
    }
}

fn sort_paths(paths: &mut [ReasoningPath]) {
    paths.sort_by(|a, b| a.seed.cmp(&b.seed).then_with(|| a.triples().cmp(&b.triples())));
}

fn sort_problems(problems: &mut Vec<ProblemReport>) {
    problems.sort_by(|a, b| {
        a.at_depth
            .cmp(&b.at_depth)
            .then_with(|| a.at_entity.cmp(&b.at_entity))
            .then_with(|| a.kind.cmp(&b.kind))
    });
}

/// Representative tail for `entity -[relation]->`: the tail with maximal
/// out-degree, ties broken by lexicographically smallest id.
pub fn select_representative(
    g: &KnowledgeGraph,
    entity: &str,
    relation: &str,
) -> Result<EntityId> {
    let adjacency = g.neighbors(entity, Direction::Outgoing)?;
    let tails = adjacency.get(relation).ok_or_else(|| {
        Error::Precondition(format!("entity {entity} has no outgoing relation {relation}"))
    })?;
    select_representative_from(g, tails).ok_or_else(|| {
        Error::Precondition(format!("relation {relation} at {entity} has an empty tail set"))
    })
}

fn select_representative_from(g: &KnowledgeGraph, tails: &BTreeSet<EntityId>) -> Option<EntityId> {
    tails
        .iter()
        .max_by(|a, b| {
            g.out_degree(a)
                .cmp(&g.out_degree(b))
                .then_with(|| b.cmp(a)) // prefer the smaller id on degree ties
        })
        .cloned()
}

/// Execute the plan's forward hops from every seed and merge the per-seed
/// results. Seeds are explored in plan order.
pub fn kg_explore(
    g: &KnowledgeGraph,
    plan: &Plan,
    matcher: &dyn Matcher,
    ledger: &CostLedger,
    cfg: &ExploreConfig,
    trace: Option<&TraceBuffer>,
) -> Result<ExplorationResult> {
    plan.validate()?;
    for seed in &plan.seed_entities {
        g.require_entity(seed)?;
    }
    let mut results = Vec::with_capacity(plan.seed_entities.len());
    for seed in &plan.seed_entities {
        results.push(explore_seed(g, plan, seed, matcher, ledger, cfg, trace)?);
    }
    Ok(ExplorationResult::merge(results))
}

struct Partial {
    steps: Vec<PathStep>,
    current: EntityId,
    visited: BTreeSet<EntityId>,
    score: f64,
}

/// Explore from a single seed. Deterministic for pure matchers; per-seed
/// calls may run concurrently as long as the matcher tolerates it.
pub fn explore_seed(
    g: &KnowledgeGraph,
    plan: &Plan,
    seed: &str,
    matcher: &dyn Matcher,
    ledger: &CostLedger,
    cfg: &ExploreConfig,
    trace: Option<&TraceBuffer>,
) -> Result<ExplorationResult> {
    g.require_entity(seed)?;
    if cfg.depth_cap == 0 {
        return Err(Error::Config("depth cap must be at least 1".to_string()));
    }
    let forward = plan.forward_instructions();
    let depth = forward.len().min(cfg.depth_cap);

    let mut out = ExplorationResult::empty();
    if forward.len() > cfg.depth_cap {
        push_problem(
            g,
            &mut out.problems,
            trace,
            ProblemKind::DepthExhausted,
            seed,
            cfg.depth_cap,
            format!(
                "plan requires {} forward hops but the depth cap is {}",
                forward.len(),
                cfg.depth_cap
            ),
        );
    }

    let mut frontier = vec![Partial {
        steps: Vec::new(),
        current: seed.to_string(),
        visited: BTreeSet::from([seed.to_string()]),
        score: 1.0,
    }];

    for hop in 0..depth {
        let instruction = forward[hop];
        let answer = plan
            .answer_for(instruction.sub_question)
            .expect("validated plan has an answer per forward instruction");
        let qualifiers = plan.qualifiers_for(instruction.sub_question);
        emit(
            trace,
            EventKind::Instruction,
            serde_json::json!({
                "seed": seed,
                "hop": hop,
                "ordinal": instruction.ordinal,
                "action": "forward_search",
                "sub_question": instruction.sub_question,
                "qualifiers": qualifiers.iter().map(|q| q.index).collect::<Vec<_>>(),
            }),
        );

        let mut next: Vec<Partial> = Vec::new();
        for partial in &frontier {
            out.expansion_count += 1;
            let mut matched_relations = 0usize;

            for (relation, direction, tails) in adjacency_of(g, &partial.current, cfg) {
                let representative = select_representative_from(g, tails)
                    .expect("indexed relations have non-empty tail sets");
                let rep_entity = g.entity(&representative).expect("indexed entity");
                let spec = compose_spec(
                    instruction,
                    &partial.current,
                    relation,
                    rep_entity,
                    direction,
                    g,
                );
                let verdict = match counted_match(
                    matcher,
                    ledger,
                    MatchKind::Forward { sub_question: instruction.sub_question },
                    rep_entity,
                    answer,
                    &spec,
                ) {
                    Ok(v) => v,
                    Err(e) => {
                        out.prune_count += 1;
                        push_problem(
                            g,
                            &mut out.problems,
                            trace,
                            ProblemKind::BackendFailure,
                            &partial.current,
                            hop,
                            format!("match backend failed on relation {relation}: {e}"),
                        );
                        continue;
                    }
                };

                if !verdict.matched {
                    out.prune_count += 1;
                    emit(
                        trace,
                        EventKind::Prune,
                        serde_json::json!({
                            "seed": seed,
                            "hop": hop,
                            "entity": partial.current,
                            "relation": relation,
                            "direction": direction,
                            "representative": representative,
                            "score": verdict.score,
                            "rationale": verdict.rationale,
                        }),
                    );
                    continue;
                }
                matched_relations += 1;
                out.admitted_count += 1;

                let mut eligible: Vec<EntityId> = tails
                    .iter()
                    .filter(|t| !partial.visited.contains(*t))
                    .cloned()
                    .collect();
                if let Some(limit) = cfg.branch_threshold {
                    if eligible.len() > limit {
                        eligible = truncate_tails(
                            g,
                            matcher,
                            ledger,
                            instruction,
                            answer,
                            &partial.current,
                            relation,
                            direction,
                            eligible,
                            limit,
                        );
                        push_problem(
                            g,
                            &mut out.problems,
                            trace,
                            ProblemKind::ExcessiveBranching,
                            &partial.current,
                            hop,
                            format!(
                                "relation {relation} fans out past the branching threshold {limit}; kept the top {limit} tails by match score"
                            ),
                        );
                    }
                }

                emit(
                    trace,
                    EventKind::Expand,
                    serde_json::json!({
                        "seed": seed,
                        "hop": hop,
                        "entity": partial.current,
                        "relation": relation,
                        "direction": direction,
                        "representative": representative,
                        "admitted": eligible,
                        "score": verdict.score,
                    }),
                );

                for tail in eligible {
                    let tail_entity = g.entity(&tail).expect("indexed entity");
                    let mut checks = Vec::new();
                    for qualifier in &qualifiers {
                        let check = run_qualifier_check(
                            g,
                            matcher,
                            ledger,
                            &mut out.problems,
                            trace,
                            qualifier.index,
                            &qualifier.text,
                            tail_entity,
                            hop,
                        );
                        checks.push(check);
                    }
                    let (head, tail_id) = match direction {
                        Direction::Outgoing => (partial.current.clone(), tail.clone()),
                        Direction::Incoming => (tail.clone(), partial.current.clone()),
                    };
                    let step = PathStep {
                        triple: Triple::new(head, relation.clone(), tail_id),
                        reversed: direction == Direction::Incoming,
                        verdict: verdict.clone(),
                        qualifier_checks: checks,
                    };
                    let mut steps = partial.steps.clone();
                    steps.push(step);
                    let mut visited = partial.visited.clone();
                    visited.insert(tail.clone());
                    next.push(Partial {
                        steps,
                        current: tail,
                        visited,
                        score: partial.score * verdict.score,
                    });
                }
            }

            if matched_relations == 0 {
                push_problem(
                    g,
                    &mut out.problems,
                    trace,
                    ProblemKind::UnmatchedPath,
                    &partial.current,
                    hop,
                    format!(
                        "no relation at {} matched the simulated answer for sub-question {}",
                        partial.current, instruction.sub_question
                    ),
                );
            }
        }

        next.sort_by(|a, b| partial_key(a).cmp(&partial_key(b)));
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }

    for partial in frontier {
        let path = ReasoningPath {
            seed: seed.to_string(),
            terminal: partial.current.clone(),
            score: partial.score,
            steps: partial.steps,
        };
        emit(
            trace,
            EventKind::Path,
            serde_json::to_value(&path).expect("path serializes"),
        );
        out.paths.push(path);
    }
    sort_paths(&mut out.paths);
    sort_problems(&mut out.problems);
    Ok(out)
}

/// Relations to evaluate at an entity, in deterministic order: outgoing
/// first (sorted by relation), then incoming when enabled.
fn adjacency_of<'g>(
    g: &'g KnowledgeGraph,
    entity: &str,
    cfg: &ExploreConfig,
) -> Vec<(&'g String, Direction, &'g BTreeSet<EntityId>)> {
    let mut out = Vec::new();
    for (relation, tails) in g
        .neighbors(entity, Direction::Outgoing)
        .expect("frontier entities exist")
    {
        out.push((relation, Direction::Outgoing, tails));
    }
    if cfg.include_incoming {
        for (relation, heads) in g
            .neighbors(entity, Direction::Incoming)
            .expect("frontier entities exist")
        {
            out.push((relation, Direction::Incoming, heads));
        }
    }
    out
}

/// Matching guidance: the instruction's match spec plus the incident triple
/// rendered with labels.
fn compose_spec(
    instruction: &Instruction,
    current: &str,
    relation: &str,
    representative: &Entity,
    direction: Direction,
    g: &KnowledgeGraph,
) -> String {
    let current_label = g.entity(current).map(|e| e.label.as_str()).unwrap_or(current);
    match direction {
        Direction::Outgoing => format!(
            "{} ; {} {} {}",
            instruction.match_spec, current_label, relation, representative.label
        ),
        Direction::Incoming => format!(
            "{} ; {} {} {}",
            instruction.match_spec, representative.label, relation, current_label
        ),
    }
}

/// Rank overflowing tails by their individual match scores (computed only
/// here) and keep the top `limit`, ties broken by id.
#[allow(clippy::too_many_arguments)]
fn truncate_tails(
    g: &KnowledgeGraph,
    matcher: &dyn Matcher,
    ledger: &CostLedger,
    instruction: &Instruction,
    answer: &SimulatedAnswer,
    current: &str,
    relation: &str,
    direction: Direction,
    eligible: Vec<EntityId>,
    limit: usize,
) -> Vec<EntityId> {
    let mut ranked: Vec<(f64, EntityId)> = eligible
        .into_iter()
        .map(|tail| {
            let entity = g.entity(&tail).expect("indexed entity");
            let spec = compose_spec(instruction, current, relation, entity, direction, g);
            let score = counted_match(
                matcher,
                ledger,
                MatchKind::Forward { sub_question: instruction.sub_question },
                entity,
                answer,
                &spec,
            )
            .map(|v| v.score)
            .unwrap_or(0.0);
            (score, tail)
        })
        .collect();
    ranked.sort_by(|(sa, ta), (sb, tb)| sb.total_cmp(sa).then_with(|| ta.cmp(tb)));
    let mut kept: Vec<EntityId> = ranked.into_iter().take(limit).map(|(_, t)| t).collect();
    kept.sort();
    kept
}

#[allow(clippy::too_many_arguments)]
fn run_qualifier_check(
    g: &KnowledgeGraph,
    matcher: &dyn Matcher,
    ledger: &CostLedger,
    problems: &mut Vec<ProblemReport>,
    trace: Option<&TraceBuffer>,
    qualifier_index: usize,
    qualifier_text: &str,
    entity: &Entity,
    hop: usize,
) -> QualifierCheck {
    // Qualifiers constrain the entity itself, not its type, so the expected
    // types mirror the entity's own labels and the decision rides on text.
    let expected_types = matcher
        .type_of(entity)
        .unwrap_or_else(|_| BTreeSet::from([crate::matching::OTHER.to_string()]));
    let answer = SimulatedAnswer {
        text: qualifier_text.to_string(),
        expected_types,
    };
    let verdict = match counted_match(
        matcher,
        ledger,
        MatchKind::Qualifier { qualifier: qualifier_index },
        entity,
        &answer,
        qualifier_text,
    ) {
        Ok(v) => v,
        Err(e) => {
            push_problem(
                g,
                problems,
                trace,
                ProblemKind::BackendFailure,
                &entity.id,
                hop,
                format!("qualifier {qualifier_index} check failed: {e}"),
            );
            MatchVerdict::unmatched("backend failure during qualifier check")
        }
    };
    if !verdict.matched {
        push_problem(
            g,
            problems,
            trace,
            ProblemKind::QualifierFailure,
            &entity.id,
            hop,
            format!("qualifier {qualifier_index} ({qualifier_text}) unmatched at {}", entity.id),
        );
    }
    QualifierCheck {
        qualifier: qualifier_index,
        verdict,
    }
}

fn push_problem(
    g: &KnowledgeGraph,
    problems: &mut Vec<ProblemReport>,
    trace: Option<&TraceBuffer>,
    kind: ProblemKind,
    at_entity: &str,
    at_depth: usize,
    note: String,
) {
    let subgraph = g
        .extract_subgraph(&BTreeSet::from([at_entity.to_string()]), 1)
        .expect("problem entities exist in the graph");
    let report = ProblemReport {
        kind,
        at_entity: at_entity.to_string(),
        at_depth,
        subgraph,
        note,
    };
    emit(
        trace,
        EventKind::Problem,
        serde_json::json!({
            "kind": report.kind,
            "entity": report.at_entity,
            "depth": report.at_depth,
            "note": report.note,
        }),
    );
    problems.push(report);
}

fn emit(trace: Option<&TraceBuffer>, kind: EventKind, payload: serde_json::Value) {
    if let Some(buffer) = trace {
        buffer.push(kind, payload);
    }
}

fn partial_key(p: &Partial) -> Vec<(EntityId, String, EntityId, bool)> {
    p.steps
        .iter()
        .map(|s| {
            (
                s.triple.head.clone(),
                s.triple.relation.clone(),
                s.triple.tail.clone(),
                s.reversed,
            )
        })
        .collect()
}

//! Cost accounting and evaluation metrics: the per-run ledger, FLOPs
//! estimation, pruning recall against a brute-force path oracle, cost
//! efficiency, and Hits@1.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::ReasoningPath;
use crate::kg::{Entity, EntityId, KnowledgeGraph, Triple};

/// Live counters for one pipeline run. Increments are atomic so concurrent
/// exploration and matching account correctly; totals are independent of
/// interleaving.
#[derive(Debug, Default)]
pub struct CostLedger {
    llm_calls: AtomicU64,
    prompt_tokens: AtomicU64,
    completion_tokens: AtomicU64,
    matcher_invocations: AtomicU64,
}

impl CostLedger {
    pub fn new() -> Self {
        CostLedger::default()
    }

    pub fn record_llm_call(&self, prompt_tokens: u64, completion_tokens: u64) {
        self.llm_calls.fetch_add(1, Ordering::Relaxed);
        self.prompt_tokens.fetch_add(prompt_tokens, Ordering::Relaxed);
        self.completion_tokens
            .fetch_add(completion_tokens, Ordering::Relaxed);
    }

    pub fn record_matcher_invocation(&self) {
        self.matcher_invocations.fetch_add(1, Ordering::Relaxed);
    }

    pub fn llm_calls(&self) -> u64 {
        self.llm_calls.load(Ordering::Relaxed)
    }

    pub fn prompt_tokens(&self) -> u64 {
        self.prompt_tokens.load(Ordering::Relaxed)
    }

    pub fn completion_tokens(&self) -> u64 {
        self.completion_tokens.load(Ordering::Relaxed)
    }

    pub fn matcher_invocations(&self) -> u64 {
        self.matcher_invocations.load(Ordering::Relaxed)
    }

    /// Serializable point-in-time view with the FLOPs estimate filled in.
    pub fn snapshot(&self, estimator: &FlopsEstimator) -> LedgerSnapshot {
        LedgerSnapshot {
            llm_calls: self.llm_calls(),
            prompt_tokens: self.prompt_tokens(),
            completion_tokens: self.completion_tokens(),
            matcher_invocations: self.matcher_invocations(),
            flops_estimate: flops_estimate(
                self,
                &estimator.planner,
                &estimator.matcher,
                estimator.matcher_tokens_per_call,
            ),
        }
    }
}

/// Frozen ledger state as it appears in result documents and trace events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub llm_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub matcher_invocations: u64,
    pub flops_estimate: f64,
}

/// Declared size of a model used for FLOPs estimation. Parameter counts are
/// estimates supplied by the operator, never measured facts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub params: f64,
}

impl ModelProfile {
    pub fn new(name: impl Into<String>, params: f64) -> Result<Self> {
        if !(params > 0.0) {
            return Err(Error::Config("model params must be > 0".to_string()));
        }
        Ok(ModelProfile {
            name: name.into(),
            params,
        })
    }

    /// Standard forward-pass approximation: two floating-point operations per
    /// parameter per token.
    pub fn flops_per_token(&self) -> f64 {
        2.0 * self.params
    }
}

/// Profiles and per-call token budget used to turn ledger counters into a
/// FLOPs figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsEstimator {
    pub planner: ModelProfile,
    pub matcher: ModelProfile,
    pub matcher_tokens_per_call: u64,
}

impl Default for FlopsEstimator {
    fn default() -> Self {
        FlopsEstimator {
            planner: ModelProfile {
                name: "planner-estimate-175b".to_string(),
                params: 175e9,
            },
            matcher: ModelProfile {
                name: "matcher-estimate-355m".to_string(),
                params: 355e6,
            },
            matcher_tokens_per_call: 128,
        }
    }
}

/// Estimated floating-point operations consumed so far:
/// `(prompt + completion tokens) * planner_flops_per_token
///  + matcher_invocations * matcher_tokens_per_call * matcher_flops_per_token`.
pub fn flops_estimate(
    ledger: &CostLedger,
    planner: &ModelProfile,
    matcher: &ModelProfile,
    matcher_tokens_per_call: u64,
) -> f64 {
    let llm_tokens = (ledger.prompt_tokens() + ledger.completion_tokens()) as f64;
    let matcher_tokens = ledger.matcher_invocations() as f64 * matcher_tokens_per_call as f64;
    llm_tokens * planner.flops_per_token() + matcher_tokens * matcher.flops_per_token()
}

/// A gold or returned path identified by its exact triple sequence.
pub type TripleSeq = Vec<Triple>;

/// Triple sequence of a reasoning path, the identity used by recall.
pub fn path_triples(path: &ReasoningPath) -> TripleSeq {
    path.steps.iter().map(|s| s.triple.clone()).collect()
}

/// Fraction of gold paths present in the returned set. Path identity is the
/// exact triple sequence.
pub fn pruning_recall(returned: &[ReasoningPath], gold: &[TripleSeq]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::UndefinedMetric(
            "pruning recall needs a non-empty gold path set".to_string(),
        ));
    }
    let returned_set: BTreeSet<TripleSeq> = returned.iter().map(path_triples).collect();
    let gold_set: BTreeSet<&TripleSeq> = gold.iter().collect();
    let hit = gold_set
        .iter()
        .filter(|g| returned_set.contains(**g))
        .count();
    Ok(hit as f64 / gold_set.len() as f64)
}

/// Ratio of pruning recall to estimated FLOPs.
pub fn cost_efficiency(recall: f64, flops: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&recall) {
        return Err(Error::Precondition(format!(
            "recall {recall} outside [0, 1]"
        )));
    }
    if !(flops > 0.0) {
        return Err(Error::UndefinedMetric(
            "cost efficiency undefined for flops <= 0".to_string(),
        ));
    }
    Ok(recall / flops)
}

/// Desk-scale bounds for the exhaustive oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_triples: usize,
    pub max_depth: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_triples: 10_000,
            max_depth: 4,
        }
    }
}

/// Exhaustively enumerate all simple paths of exactly `depth` outgoing hops
/// from any seed whose terminal entity satisfies `terminal_predicate`.
/// Output is sorted lexicographically by triple sequence.
///
/// This is the ground truth that exploration is checked against: exploration
/// only ever prunes, so its output is always a subset of this enumeration.
pub fn brute_force_paths(
    g: &KnowledgeGraph,
    seeds: &[EntityId],
    depth: usize,
    terminal_predicate: impl Fn(&Entity) -> bool,
    cfg: &OracleConfig,
) -> Result<Vec<TripleSeq>> {
    if g.triple_count() > cfg.max_triples {
        return Err(Error::OracleBound(format!(
            "graph has {} triples, oracle bound is {}",
            g.triple_count(),
            cfg.max_triples
        )));
    }
    if depth == 0 || depth > cfg.max_depth {
        return Err(Error::OracleBound(format!(
            "depth {depth} outside 1..={}",
            cfg.max_depth
        )));
    }
    let unique_seeds: BTreeSet<&EntityId> = seeds.iter().collect();
    for seed in &unique_seeds {
        g.require_entity(seed)?;
    }

    let mut out: BTreeSet<TripleSeq> = BTreeSet::new();
    // Iterative DFS over (current entity, path so far, visited set).
    let mut stack: Vec<(EntityId, TripleSeq, BTreeSet<EntityId>)> = unique_seeds
        .iter()
        .map(|s| ((*s).clone(), Vec::new(), BTreeSet::from([(*s).clone()])))
        .collect();
    while let Some((current, path, visited)) = stack.pop() {
        if path.len() == depth {
            let terminal = g.entity(&current).expect("path entities exist");
            if terminal_predicate(terminal) {
                out.insert(path);
            }
            continue;
        }
        let adjacency = g
            .neighbors(&current, crate::kg::Direction::Outgoing)
            .expect("path entities exist");
        for (relation, tails) in adjacency {
            for tail in tails {
                if visited.contains(tail) {
                    continue;
                }
                let mut next_path = path.clone();
                next_path.push(Triple::new(current.clone(), relation.clone(), tail.clone()));
                let mut next_visited = visited.clone();
                next_visited.insert(tail.clone());
                stack.push((tail.clone(), next_path, next_visited));
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Whitespace-token count, the deterministic approximation used when a
/// backend does not report real token usage.
pub fn estimate_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// 1 when the first answer is in the gold set, otherwise 0 (empty answer
/// lists score 0).
pub fn hits_at_1(answers: &[EntityId], gold: &BTreeSet<EntityId>) -> u32 {
    match answers.first() {
        Some(first) if gold.contains(first) => 1,
        _ => 0,
    }
}

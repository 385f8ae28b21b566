//! Global planning: decompose a question into sub-questions and qualifiers,
//! simulate answers, and assemble ordered action instructions.
//!
//! Planning is a single backend round-trip per plan version: one call covers
//! entity extraction, decomposition, answer simulation, and instruction
//! generation; revisions and per-iteration aggregation cost one call each.
//! Two backends implement [`Planner`]: [`ScriptedPlanner`] replays fixture
//! documents (all offline tests run on it, with calls and token estimates
//! accounted as if remote), and [`RemotePlanner`] speaks the chat-completions
//! wire protocol.

pub(crate) mod prompts;
mod remote;
mod scripted;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::metrics::CostLedger;

pub use remote::RemotePlanner;
pub use scripted::ScriptedPlanner;

/// One decomposition unit of the original question; governs one forward hop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuestion {
    /// 1-based ordinal within the plan.
    pub index: usize,
    pub text: String,
}

/// An adverbial constraint (temporal, locative, ...) attached to one
/// sub-question and checked on entities admitted for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qualifier {
    /// 1-based ordinal within the plan.
    pub index: usize,
    pub text: String,
    /// Index of the sub-question this qualifier constrains.
    pub attaches_to: usize,
}

/// A guessed answer whose surface text may be wrong but whose expected type
/// labels constrain matching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulatedAnswer {
    pub text: String,
    /// Never empty: a simulated answer must constrain type even when the
    /// guessed text is stale.
    pub expected_types: std::collections::BTreeSet<String>,
}

/// Action kinds the executor understands. The enum is open to extension;
/// only these two are produced today.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionAction {
    ForwardSearch,
    AdverbialQualifier,
}

/// One executable step. Forward-search instructions consume one exploration
/// hop each (in ordinal order); adverbial-qualifier instructions bind their
/// qualifier to the hop of the sub-question they reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    /// 1-based position, fixed at generation time for deterministic replay.
    pub ordinal: usize,
    pub action: InstructionAction,
    /// Index of the governing sub-question.
    pub sub_question: usize,
    /// Present exactly when `action` is `AdverbialQualifier`.
    pub qualifier: Option<usize>,
    /// Free-text guidance forwarded to the matcher.
    pub match_spec: String,
}

/// A complete plan version. `iteration` 0 is the initial plan; each revision
/// increments it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub seed_entities: Vec<EntityId>,
    pub sub_questions: Vec<SubQuestion>,
    pub qualifiers: Vec<Qualifier>,
    /// Keyed by sub-question index.
    pub simulated_answers: BTreeMap<usize, SimulatedAnswer>,
    pub instructions: Vec<Instruction>,
    /// Predicate the terminal entity must satisfy, checked at verification.
    pub final_constraint: String,
    pub iteration: u32,
}

impl Plan {
    /// Forward-search instructions in ordinal order; instruction `i` governs
    /// hop `i`.
    pub fn forward_instructions(&self) -> Vec<&Instruction> {
        self.instructions
            .iter()
            .filter(|i| i.action == InstructionAction::ForwardSearch)
            .collect()
    }

    /// Qualifiers attached to a sub-question, in qualifier-index order.
    pub fn qualifiers_for(&self, sub_question: usize) -> Vec<&Qualifier> {
        self.qualifiers
            .iter()
            .filter(|q| q.attaches_to == sub_question)
            .collect()
    }

    pub fn answer_for(&self, sub_question: usize) -> Option<&SimulatedAnswer> {
        self.simulated_answers.get(&sub_question)
    }

    /// Number of sub-questions M; the hop class (single vs multi) derives
    /// from it.
    pub fn sub_question_count(&self) -> usize {
        self.sub_questions.len()
    }

    /// Canonical plan document: stable field order, byte-identical for
    /// identical plans.
    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed_entities.is_empty() {
            return Err(Error::InvalidPlan("plan has no seed entities".to_string()));
        }
        for (i, seed) in self.seed_entities.iter().enumerate() {
            if seed.is_empty() {
                return Err(Error::InvalidPlan("empty seed entity id".to_string()));
            }
            if self.seed_entities[..i].contains(seed) {
                return Err(Error::InvalidPlan(format!("duplicate seed entity {seed}")));
            }
        }
        if self.sub_questions.is_empty() {
            return Err(Error::InvalidPlan("plan has no sub-questions".to_string()));
        }
        for (i, sq) in self.sub_questions.iter().enumerate() {
            if sq.index != i + 1 {
                return Err(Error::InvalidPlan(format!(
                    "sub-question indices must be 1..=M in order, found {} at position {}",
                    sq.index,
                    i + 1
                )));
            }
            if sq.text.is_empty() {
                return Err(Error::InvalidPlan(format!(
                    "sub-question {} has empty text",
                    sq.index
                )));
            }
        }
        let m = self.sub_questions.len();
        if self.qualifiers.len() > m {
            return Err(Error::InvalidPlan(format!(
                "qualifier count {} exceeds sub-question count {m}",
                self.qualifiers.len()
            )));
        }
        for (i, q) in self.qualifiers.iter().enumerate() {
            if q.index != i + 1 {
                return Err(Error::InvalidPlan(format!(
                    "qualifier indices must be 1..=N in order, found {} at position {}",
                    q.index,
                    i + 1
                )));
            }
            if q.text.is_empty() {
                return Err(Error::InvalidPlan(format!("qualifier {} has empty text", q.index)));
            }
            if q.attaches_to == 0 || q.attaches_to > m {
                return Err(Error::InvalidPlan(format!(
                    "qualifier {} attaches to unknown sub-question {}",
                    q.index, q.attaches_to
                )));
            }
        }
        for (idx, answer) in &self.simulated_answers {
            if *idx == 0 || *idx > m {
                return Err(Error::InvalidPlan(format!(
                    "simulated answer for unknown sub-question {idx}"
                )));
            }
            if answer.expected_types.is_empty() {
                return Err(Error::InvalidPlan(format!(
                    "simulated answer for sub-question {idx} has no expected types"
                )));
            }
        }
        let mut forward_seen = Vec::new();
        for (i, instr) in self.instructions.iter().enumerate() {
            if instr.ordinal != i + 1 {
                return Err(Error::InvalidPlan(format!(
                    "instruction ordinals must be 1..=K in order, found {} at position {}",
                    instr.ordinal,
                    i + 1
                )));
            }
            if instr.sub_question == 0 || instr.sub_question > m {
                return Err(Error::InvalidPlan(format!(
                    "instruction {} references unknown sub-question {}",
                    instr.ordinal, instr.sub_question
                )));
            }
            match instr.action {
                InstructionAction::ForwardSearch => {
                    if instr.qualifier.is_some() {
                        return Err(Error::InvalidPlan(format!(
                            "forward-search instruction {} must not carry a qualifier",
                            instr.ordinal
                        )));
                    }
                    if self.answer_for(instr.sub_question).is_none() {
                        return Err(Error::InvalidPlan(format!(
                            "forward-search instruction {} has no simulated answer for sub-question {}",
                            instr.ordinal, instr.sub_question
                        )));
                    }
                    forward_seen.push(instr.sub_question);
                }
                InstructionAction::AdverbialQualifier => {
                    let Some(q_idx) = instr.qualifier else {
                        return Err(Error::InvalidPlan(format!(
                            "adverbial-qualifier instruction {} is missing its qualifier",
                            instr.ordinal
                        )));
                    };
                    let Some(q) = self.qualifiers.iter().find(|q| q.index == q_idx) else {
                        return Err(Error::InvalidPlan(format!(
                            "instruction {} references unknown qualifier {q_idx}",
                            instr.ordinal
                        )));
                    };
                    if q.attaches_to != instr.sub_question {
                        return Err(Error::InvalidPlan(format!(
                            "instruction {} binds qualifier {q_idx} to sub-question {} but it attaches to {}",
                            instr.ordinal, instr.sub_question, q.attaches_to
                        )));
                    }
                }
            }
        }
        let expected: Vec<usize> = (1..=m).collect();
        if forward_seen != expected {
            return Err(Error::InvalidPlan(format!(
                "forward-search instructions must cover sub-questions 1..={m} exactly once in order, got {forward_seen:?}"
            )));
        }
        if self.final_constraint.is_empty() {
            return Err(Error::InvalidPlan("empty final constraint".to_string()));
        }
        Ok(())
    }
}

/// Digest of a failed iteration fed back to the planner: rendered problem
/// summaries plus compact serializations of the problematic subgraphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CluePrompt {
    pub problem_summaries: Vec<String>,
    pub subgraph_digests: Vec<String>,
}

impl CluePrompt {
    pub fn is_empty(&self) -> bool {
        self.problem_summaries.is_empty() && self.subgraph_digests.is_empty()
    }

    pub fn rendered(&self) -> String {
        let mut out = String::new();
        for s in &self.problem_summaries {
            out.push_str("- ");
            out.push_str(s);
            out.push('\n');
        }
        for d in &self.subgraph_digests {
            out.push_str("  subgraph: ");
            out.push_str(d);
            out.push('\n');
        }
        out
    }
}

/// Context handed to the aggregate-stage backend call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AggregateContext {
    pub answered: bool,
    pub final_entities: Vec<EntityId>,
    pub confidence: Option<String>,
    pub summary_lines: Vec<String>,
}

/// A planning backend. Each method is one backend round-trip and must record
/// exactly one LLM call on the ledger; the scripted backend counts calls and
/// token estimates as if it were remote, so accounting identities hold
/// across backends.
pub trait Planner: Send + Sync {
    fn name(&self) -> &str;

    /// Produce the initial plan (iteration 0) for a question: seed
    /// extraction, decomposition, simulated answers, and instructions in one
    /// round-trip.
    fn initial_plan(&self, query: &str, ledger: &CostLedger) -> Result<Plan>;

    /// Produce a revised plan with `iteration = prev.iteration + 1`.
    /// `clues` must be non-empty; `prev` is never mutated.
    fn revise_plan(
        &self,
        query: &str,
        prev: &Plan,
        clues: &CluePrompt,
        ledger: &CostLedger,
    ) -> Result<Plan>;

    /// Aggregate-stage call: phrase the iteration outcome. Called once per
    /// iteration.
    fn render_aggregate(
        &self,
        query: &str,
        ctx: &AggregateContext,
        ledger: &CostLedger,
    ) -> Result<String>;
}

/// Seed entity ids for a query, restricted to ids resolvable in the target
/// graph. Costs one planning round-trip when invoked standalone.
pub fn extract_entity(
    planner: &dyn Planner,
    g: &KnowledgeGraph,
    query: &str,
    ledger: &CostLedger,
) -> Result<Vec<EntityId>> {
    if query.is_empty() {
        return Err(Error::Precondition("query must be non-empty".to_string()));
    }
    let plan = planner.initial_plan(query, ledger)?;
    let seeds: Vec<EntityId> = plan
        .seed_entities
        .into_iter()
        .filter(|s| g.contains_entity(s))
        .collect();
    if seeds.is_empty() {
        return Err(Error::EmptyPlan(format!(
            "no seed entity resolvable in the graph for query: {query}"
        )));
    }
    Ok(seeds)
}

/// Sub-questions and qualifiers for a query. Costs one planning round-trip
/// when invoked standalone.
pub fn decompose(
    planner: &dyn Planner,
    query: &str,
    seeds: &[EntityId],
    ledger: &CostLedger,
) -> Result<(Vec<SubQuestion>, Vec<Qualifier>)> {
    if seeds.is_empty() {
        return Err(Error::Precondition("decompose needs seed entities".to_string()));
    }
    let plan = planner.initial_plan(query, ledger)?;
    Ok((plan.sub_questions, plan.qualifiers))
}

/// One simulated answer per sub-question, in sub-question order. Costs one
/// planning round-trip when invoked standalone.
pub fn simulate_answers(
    planner: &dyn Planner,
    query: &str,
    sub_questions: &[SubQuestion],
    _qualifiers: &[Qualifier],
    ledger: &CostLedger,
) -> Result<Vec<SimulatedAnswer>> {
    if sub_questions.is_empty() {
        return Err(Error::Precondition(
            "simulate_answers needs sub-questions".to_string(),
        ));
    }
    let plan = planner.initial_plan(query, ledger)?;
    let mut out = Vec::with_capacity(sub_questions.len());
    for sq in sub_questions {
        let answer = plan.answer_for(sq.index).ok_or_else(|| {
            Error::PlanFormat(format!("no simulated answer for sub-question {}", sq.index))
        })?;
        if answer.expected_types.is_empty() {
            return Err(Error::PlanFormat(format!(
                "simulated answer for sub-question {} carries no type constraint",
                sq.index
            )));
        }
        out.push(answer.clone());
    }
    Ok(out)
}

/// Assemble a plan from decomposition parts: one forward-search instruction
/// per sub-question in dependency order, one adverbial-qualifier instruction
/// per qualifier (placed after the forward search of the sub-question it
/// constrains), match specs defaulting to the sub-question or qualifier
/// text, and the final constraint derived from the last sub-question's
/// expected answer types. The result is iteration 0.
pub fn generate_instructions(
    seeds: Vec<EntityId>,
    sub_questions: Vec<SubQuestion>,
    qualifiers: Vec<Qualifier>,
    answers: BTreeMap<usize, SimulatedAnswer>,
) -> Result<Plan> {
    assemble_plan(seeds, sub_questions, qualifiers, answers, &[], None, 0)
}

pub(crate) fn assemble_plan(
    seeds: Vec<EntityId>,
    sub_questions: Vec<SubQuestion>,
    qualifiers: Vec<Qualifier>,
    answers: BTreeMap<usize, SimulatedAnswer>,
    match_specs: &[(usize, String)],
    final_constraint: Option<String>,
    iteration: u32,
) -> Result<Plan> {
    let spec_for = |sub_question: usize| -> Option<String> {
        match_specs
            .iter()
            .find(|(idx, _)| *idx == sub_question)
            .map(|(_, text)| text.clone())
    };
    let mut instructions = Vec::new();
    for sq in &sub_questions {
        instructions.push(Instruction {
            ordinal: instructions.len() + 1,
            action: InstructionAction::ForwardSearch,
            sub_question: sq.index,
            qualifier: None,
            match_spec: spec_for(sq.index).unwrap_or_else(|| sq.text.clone()),
        });
        for q in qualifiers.iter().filter(|q| q.attaches_to == sq.index) {
            instructions.push(Instruction {
                ordinal: instructions.len() + 1,
                action: InstructionAction::AdverbialQualifier,
                sub_question: sq.index,
                qualifier: Some(q.index),
                match_spec: q.text.clone(),
            });
        }
    }
    let final_constraint = match final_constraint {
        Some(fc) => fc,
        None => {
            let last = sub_questions
                .last()
                .ok_or_else(|| Error::InvalidPlan("plan has no sub-questions".to_string()))?;
            let types = answers
                .get(&last.index)
                .map(|a| a.expected_types.iter().cloned().collect::<Vec<_>>().join(", "))
                .unwrap_or_default();
            format!("terminal entity type in {{{types}}}")
        }
    };
    let plan = Plan {
        seed_entities: seeds,
        sub_questions,
        qualifiers,
        simulated_answers: answers,
        instructions,
        final_constraint,
        iteration,
    };
    plan.validate()?;
    Ok(plan)
}

/// Revise a plan through the backend, enforcing the revision contract:
/// non-empty clues in, iteration incremented by exactly one out, previous
/// plan untouched.
pub fn revise_plan(
    planner: &dyn Planner,
    query: &str,
    prev: &Plan,
    clues: &CluePrompt,
    ledger: &CostLedger,
) -> Result<Plan> {
    if clues.is_empty() {
        return Err(Error::Precondition(
            "revise_plan requires non-empty clues".to_string(),
        ));
    }
    let revised = planner.revise_plan(query, prev, clues, ledger)?;
    if revised.iteration != prev.iteration + 1 {
        return Err(Error::PlanFormat(format!(
            "revision must increment iteration from {} to {}, backend produced {}",
            prev.iteration,
            prev.iteration + 1,
            revised.iteration
        )));
    }
    revised.validate()?;
    Ok(revised)
}

/// Wire/fixture form of one plan version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDoc {
    pub seeds: Vec<EntityId>,
    pub sub_questions: Vec<SubQuestion>,
    #[serde(default)]
    pub qualifiers: Vec<Qualifier>,
    pub simulated_answers: Vec<AnswerDoc>,
    #[serde(default)]
    pub match_specs: Vec<MatchSpecDoc>,
    #[serde(default)]
    pub final_constraint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerDoc {
    pub sub_question: usize,
    pub text: String,
    pub expected_types: std::collections::BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSpecDoc {
    pub sub_question: usize,
    pub text: String,
}

impl PlanDoc {
    pub fn into_plan(self, iteration: u32) -> Result<Plan> {
        let mut answers = BTreeMap::new();
        for a in self.simulated_answers {
            if answers
                .insert(
                    a.sub_question,
                    SimulatedAnswer {
                        text: a.text,
                        expected_types: a.expected_types,
                    },
                )
                .is_some()
            {
                return Err(Error::PlanFormat(format!(
                    "duplicate simulated answer for sub-question {}",
                    a.sub_question
                )));
            }
        }
        let specs: Vec<(usize, String)> = self
            .match_specs
            .into_iter()
            .map(|s| (s.sub_question, s.text))
            .collect();
        // documents come from backends, so validation failures are
        // plan-format errors rather than caller mistakes
        assemble_plan(
            self.seeds,
            self.sub_questions,
            self.qualifiers,
            answers,
            &specs,
            self.final_constraint,
            iteration,
        )
        .map_err(|e| match e {
            Error::InvalidPlan(msg) => Error::PlanFormat(msg),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn subq(index: usize, text: &str) -> SubQuestion {
        SubQuestion {
            index,
            text: text.to_string(),
        }
    }

    fn answer(text: &str, types: &[&str]) -> SimulatedAnswer {
        SimulatedAnswer {
            text: text.to_string(),
            expected_types: types.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn two_sub_questions_yield_two_ordered_forward_instructions() {
        let plan = generate_instructions(
            vec!["seed".to_string()],
            vec![subq(1, "who performs it"), subq(2, "which college")],
            vec![],
            BTreeMap::from([
                (1, answer("guess", &["person/artist/music"])),
                (2, answer("guess", &["organization/education/college"])),
            ]),
        )
        .unwrap();
        assert_eq!(plan.instructions.len(), 2);
        assert!(plan
            .instructions
            .iter()
            .all(|i| i.action == InstructionAction::ForwardSearch));
        assert_eq!(
            plan.instructions.iter().map(|i| i.sub_question).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(plan.iteration, 0);
        assert!(plan.final_constraint.contains("organization/education/college"));
    }

    #[test]
    fn qualifier_instruction_follows_its_sub_question() {
        let plan = generate_instructions(
            vec!["seed".to_string()],
            vec![subq(1, "films directed by x")],
            vec![Qualifier {
                index: 1,
                text: "after 2010".to_string(),
                attaches_to: 1,
            }],
            BTreeMap::from([(1, answer("some film", &["art/film"]))]),
        )
        .unwrap();
        assert_eq!(plan.instructions.len(), 2);
        assert_eq!(plan.instructions[0].action, InstructionAction::ForwardSearch);
        assert_eq!(plan.instructions[1].action, InstructionAction::AdverbialQualifier);
        assert_eq!(plan.instructions[1].qualifier, Some(1));
        assert_eq!(plan.instructions[1].sub_question, 1);
        assert_eq!(plan.instructions[1].match_spec, "after 2010");
    }

    #[test]
    fn more_qualifiers_than_sub_questions_rejected() {
        let err = generate_instructions(
            vec!["seed".to_string()],
            vec![subq(1, "one question")],
            vec![
                Qualifier { index: 1, text: "a".to_string(), attaches_to: 1 },
                Qualifier { index: 2, text: "b".to_string(), attaches_to: 1 },
            ],
            BTreeMap::from([(1, answer("x", &["other"]))]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("exceeds sub-question count"));
    }

    #[test]
    fn missing_answer_for_forward_search_rejected() {
        let err = generate_instructions(
            vec!["seed".to_string()],
            vec![subq(1, "q1"), subq(2, "q2")],
            vec![],
            BTreeMap::from([(1, answer("x", &["other"]))]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("no simulated answer"));
    }

    #[test]
    fn empty_expected_types_rejected() {
        let err = generate_instructions(
            vec!["seed".to_string()],
            vec![subq(1, "q1")],
            vec![],
            BTreeMap::from([(1, answer("x", &[]))]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("no expected types"));
    }

    #[test]
    fn dangling_qualifier_attachment_rejected() {
        let err = generate_instructions(
            vec!["seed".to_string()],
            vec![subq(1, "q1")],
            vec![Qualifier { index: 1, text: "t".to_string(), attaches_to: 9 }],
            BTreeMap::from([(1, answer("x", &["other"]))]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown sub-question"));
    }

    #[test]
    fn plan_document_is_stable() {
        let make = || {
            generate_instructions(
                vec!["s".to_string()],
                vec![subq(1, "q1")],
                vec![],
                BTreeMap::from([(1, answer("x", &["other"]))]),
            )
            .unwrap()
        };
        assert_eq!(make().to_document(), make().to_document());
    }

    #[test]
    fn plan_doc_round_trip() {
        let doc = PlanDoc {
            seeds: vec!["s".to_string()],
            sub_questions: vec![subq(1, "q1")],
            qualifiers: vec![],
            simulated_answers: vec![AnswerDoc {
                sub_question: 1,
                text: "x".to_string(),
                expected_types: BTreeSet::from(["other".to_string()]),
            }],
            match_specs: vec![MatchSpecDoc {
                sub_question: 1,
                text: "guidance".to_string(),
            }],
            final_constraint: Some("anything".to_string()),
        };
        let plan = doc.into_plan(3).unwrap();
        assert_eq!(plan.iteration, 3);
        assert_eq!(plan.instructions[0].match_spec, "guidance");
        assert_eq!(plan.final_constraint, "anything");
    }
}

//! Planner backend that replays fixture documents.
//!
//! The fixture is one JSON file keyed by query text; each entry carries the
//! plan documents for iteration 0, 1, 2, ... in order. A revision past the
//! last scripted document repeats it (with the iteration bumped), so
//! deliberately unsolvable fixtures keep failing until the reflection cap.
//!
//! Calls and token estimates are accounted exactly as the remote backend
//! would account them, so call-budget identities hold offline.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{estimate_tokens, CostLedger};

use super::prompts;
use super::{AggregateContext, CluePrompt, Plan, PlanDoc, Planner};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptDoc {
    #[serde(default)]
    version: u32,
    queries: Vec<ScriptEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptEntry {
    query: String,
    /// Plan documents by iteration; must be non-empty.
    plans: Vec<PlanDoc>,
}

pub struct ScriptedPlanner {
    entries: BTreeMap<String, Vec<PlanDoc>>,
}

impl ScriptedPlanner {
    pub fn from_path(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&content)
    }

    pub fn from_json(content: &str) -> Result<Self> {
        let doc: ScriptDoc = serde_json::from_str(content)
            .map_err(|e| Error::Config(format!("invalid planner script: {e}")))?;
        let mut entries = BTreeMap::new();
        for entry in doc.queries {
            if entry.plans.is_empty() {
                return Err(Error::Config(format!(
                    "scripted query has no plans: {}",
                    entry.query
                )));
            }
            if entries.insert(entry.query.clone(), entry.plans).is_some() {
                return Err(Error::Config(format!(
                    "duplicate scripted query: {}",
                    entry.query
                )));
            }
        }
        Ok(ScriptedPlanner { entries })
    }

    fn plans_for(&self, query: &str) -> Result<&[PlanDoc]> {
        self.entries
            .get(query)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::EmptyPlan(format!("no scripted plan for query: {query}")))
    }
}

impl Planner for ScriptedPlanner {
    fn name(&self) -> &str {
        "scripted"
    }

    fn initial_plan(&self, query: &str, ledger: &CostLedger) -> Result<Plan> {
        let plans = self.plans_for(query)?;
        let plan = plans[0].clone().into_plan(0)?;
        ledger.record_llm_call(
            estimate_tokens(&prompts::render_plan(query)),
            estimate_tokens(&plan.to_document()),
        );
        Ok(plan)
    }

    fn revise_plan(
        &self,
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
        let plans = self.plans_for(query)?;
        let next_iteration = prev.iteration + 1;
        // past the last scripted revision, the final document repeats
        let idx = (next_iteration as usize).min(plans.len() - 1);
        let plan = plans[idx].clone().into_plan(next_iteration)?;
        ledger.record_llm_call(
            estimate_tokens(&prompts::render_revise(query, prev, clues)),
            estimate_tokens(&plan.to_document()),
        );
        Ok(plan)
    }

    fn render_aggregate(
        &self,
        query: &str,
        ctx: &AggregateContext,
        ledger: &CostLedger,
    ) -> Result<String> {
        let text = if ctx.answered {
            format!(
                "Answer ({}): {}",
                ctx.confidence.as_deref().unwrap_or("unknown"),
                ctx.final_entities.join(", ")
            )
        } else {
            format!(
                "No validated answer; {} problem(s) observed.",
                ctx.summary_lines.len()
            )
        };
        ledger.record_llm_call(
            estimate_tokens(&prompts::render_aggregate(query, ctx)),
            estimate_tokens(&text),
        );
        Ok(text)
    }
}

//! Fixed prompt templates shipped as assets. Both planner backends render
//! the same text: the remote backend sends it, the scripted backend uses it
//! for deterministic token estimates.

use crate::matching::TypeTaxonomy;
use crate::plan::{AggregateContext, CluePrompt, Plan};

pub const SYSTEM: &str =
    "You orchestrate question answering over a knowledge graph. Follow the requested output format exactly.";

const PLAN: &str = include_str!("../../assets/prompts/plan.txt");
const REVISE: &str = include_str!("../../assets/prompts/revise.txt");
const AGGREGATE: &str = include_str!("../../assets/prompts/aggregate.txt");

pub fn render_plan(query: &str) -> String {
    let taxonomy = TypeTaxonomy::builtin()
        .labels()
        .collect::<Vec<_>>()
        .join("\n");
    PLAN.replace("{query}", query).replace("{taxonomy}", &taxonomy)
}

pub fn render_revise(query: &str, prev: &Plan, clues: &CluePrompt) -> String {
    REVISE
        .replace("{query}", query)
        .replace("{plan}", &prev.to_document())
        .replace("{clues}", &clues.rendered())
}

pub fn render_aggregate(query: &str, ctx: &AggregateContext) -> String {
    let mut context = String::new();
    if ctx.answered {
        context.push_str(&format!(
            "validated answer entities ({}): {}\n",
            ctx.confidence.as_deref().unwrap_or("unknown"),
            ctx.final_entities.join(", ")
        ));
    } else {
        context.push_str("no validated answer\n");
    }
    for line in &ctx.summary_lines {
        context.push_str(line);
        context.push('\n');
    }
    AGGREGATE
        .replace("{query}", query)
        .replace("{context}", &context)
}

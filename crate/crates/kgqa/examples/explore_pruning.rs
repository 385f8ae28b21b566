//! Constrained breadth-first exploration with the lexical matcher: relations
//! whose representative tail fails the type gate or the similarity threshold
//! are pruned, everything else expands, and the surviving path validates
//! into a high-confidence answer.
//!
//! ```bash
//! cargo run -p kgqa --example explore_pruning
//! ```

use std::collections::BTreeSet;

use kgqa::explore::{kg_explore, ExploreConfig};
use kgqa::kg::{Entity, KnowledgeGraph, Triple};
use kgqa::matching::LexicalMatcher;
use kgqa::metrics::CostLedger;
use kgqa::plan::{AnswerDoc, PlanDoc, SubQuestion};
use kgqa::reflect::{aggregate, Aggregation};

fn entity(id: &str, label: &str, description: &str, types: &[&str]) -> Entity {
    Entity {
        id: id.to_string(),
        label: label.to_string(),
        description: description.to_string(),
        fine_types: types.iter().map(|s| s.to_string()).collect(),
    }
}

fn main() -> kgqa::Result<()> {
    // A small band world with one good relation and two distractors. The
    // lexical matcher works on labels and descriptions, so the fixture keeps
    // its wording token-friendly.
    let graph = KnowledgeGraph::from_parts(
        [
            entity("glass_harbor", "Glass Harbor", "indie rock band", &["organization/music"]),
            entity(
                "nora_vale",
                "Nora Vale",
                "lead singer of glass harbor",
                &["person/artist/music"],
            ),
            entity("indie_rock", "Indie Rock", "guitar driven genre", &["art/music"]),
        ],
        [
            Triple::new("glass_harbor", "lead_singer", "nora_vale"),
            Triple::new("glass_harbor", "genre", "indie_rock"),
            Triple::new("glass_harbor", "founded_in", "year_2015"),
        ],
    )?;

    let plan = PlanDoc {
        seeds: vec!["glass_harbor".to_string()],
        sub_questions: vec![SubQuestion {
            index: 1,
            text: "lead singer of glass harbor".to_string(),
        }],
        qualifiers: vec![],
        simulated_answers: vec![AnswerDoc {
            sub_question: 1,
            text: "nora vale".to_string(),
            expected_types: BTreeSet::from(["person/artist/music".to_string()]),
        }],
        match_specs: vec![],
        final_constraint: Some("lead singer of glass harbor".to_string()),
    }
    .into_plan(0)?;

    let matcher = LexicalMatcher::with_defaults();
    let ledger = CostLedger::new();
    let result = kg_explore(&graph, &plan, &matcher, &ledger, &ExploreConfig::default(), None)?;

    println!("relations evaluated: {}", result.admitted_count + result.prune_count);
    println!("  admitted: {}", result.admitted_count);
    println!("  pruned:   {}", result.prune_count);
    println!("matcher invocations: {}", ledger.matcher_invocations());

    println!("\nsurviving paths:");
    for path in &result.paths {
        for step in &path.steps {
            println!(
                "  {}  (score {:.3}: {})",
                step.triple, step.verdict.score, step.verdict.rationale
            );
        }
    }

    let results = vec![result];
    match aggregate(&graph, &results, &plan, &matcher, &ledger)? {
        Aggregation::Answer(answer) => {
            println!(
                "\nanswer: {:?} ({:?} confidence)",
                answer.final_entities, answer.confidence
            );
        }
        Aggregation::Clues(clues) => {
            println!("\nno validated answer; clues for replanning:");
            for summary in &clues.problem_summaries {
                println!("  - {summary}");
            }
        }
    }
    Ok(())
}

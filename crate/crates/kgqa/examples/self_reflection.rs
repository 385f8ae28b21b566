//! Plan revision in action: the initial plan anchors on the wrong seed, the
//! dead frontier becomes a clue prompt, and the revised plan reaches the
//! answer on the next iteration.
//!
//! ```bash
//! cargo run -p kgqa --example self_reflection
//! ```

use std::path::PathBuf;

use kgqa::kg::load_graph;
use kgqa::matching::TableMatcher;
use kgqa::plan::ScriptedPlanner;
use kgqa::reflect::{run_pipeline, PipelineConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo")
        .join(name)
}

fn main() -> kgqa::Result<()> {
    let graph = load_graph(&fixture("graph.tsv"), Some(&fixture("meta.tsv")))?;
    let planner = ScriptedPlanner::from_path(&fixture("planner.json"))?;
    let matcher = TableMatcher::from_path(&fixture("matcher.json"))?;

    let question = "Which instrument does the lead singer of Glass Harbor play?";
    println!("question: {question}");

    let run = run_pipeline(
        &graph,
        &planner,
        &matcher,
        question,
        &PipelineConfig::default(),
        None,
    )?;

    for record in &run.iterations {
        println!("\n--- iteration {} ---", record.iteration);
        println!("seeds: {:?}", record.plan.seed_entities);
        println!(
            "explored: {} paths, {} problems, {} relations pruned",
            record.result.paths.len(),
            record.result.problems.len(),
            record.result.prune_count
        );
        if let Some(clues) = &record.clues {
            println!("clues fed back to the planner:");
            for summary in &clues.problem_summaries {
                println!("  - {summary}");
            }
            for digest in &clues.subgraph_digests {
                println!("    {digest}");
            }
        }
        if let Some(answer) = &record.answer {
            println!(
                "answer: {:?} ({:?} confidence)",
                answer.final_entities, answer.confidence
            );
        }
    }
    println!(
        "\nresolved after {} reflection(s), {} llm calls",
        run.reflections(),
        run.ledger.llm_calls
    );
    Ok(())
}

//! Full planning / exploration / reflection loop on the bundled fixtures:
//! the scripted planner supplies the decomposition, the table matcher admits
//! the gold relations, and the answer validates with high confidence after
//! exactly two backend calls.
//!
//! ```bash
//! cargo run -p kgqa --example scripted_pipeline
//! ```

use std::path::PathBuf;

use kgqa::kg::load_graph;
use kgqa::matching::TableMatcher;
use kgqa::plan::ScriptedPlanner;
use kgqa::reflect::{run_pipeline, PipelineConfig, PipelineOutcome};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo")
        .join(name)
}

fn main() -> kgqa::Result<()> {
    let graph = load_graph(&fixture("graph.tsv"), Some(&fixture("meta.tsv")))?;
    let planner = ScriptedPlanner::from_path(&fixture("planner.json"))?;
    let matcher = TableMatcher::from_path(&fixture("matcher.json"))?;

    let question = "Where did the 'Country Nation World Tour' concert artist go to college?";
    println!("question: {question}\n");

    let run = run_pipeline(
        &graph,
        &planner,
        &matcher,
        question,
        &PipelineConfig::default(),
        None,
    )?;

    match &run.outcome {
        PipelineOutcome::Answered { answer, answer_text } => {
            println!("{answer_text}");
            println!("confidence: {:?}", answer.confidence);
            for entity in &answer.final_entities {
                println!("\nsupporting paths for {entity}:");
                for path in &answer.supporting_paths[entity] {
                    for step in &path.steps {
                        println!("  {}", step.triple);
                    }
                }
            }
        }
        PipelineOutcome::Failed { failure } => {
            println!("failed ({:?}): {}", failure.kind, failure.reason);
        }
    }

    println!("\ncost ledger:");
    println!("  llm calls:           {}", run.ledger.llm_calls);
    println!("  prompt tokens:       {}", run.ledger.prompt_tokens);
    println!("  completion tokens:   {}", run.ledger.completion_tokens);
    println!("  matcher invocations: {}", run.ledger.matcher_invocations);
    println!("  flops estimate:      {:.3e}", run.ledger.flops_estimate);
    Ok(())
}

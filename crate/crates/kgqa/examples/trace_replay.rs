//! Decision tracing and replay: run a question with a trace sink, then
//! reconstruct the answer from the trace events alone and check it against
//! the recorded outcome.
//!
//! ```bash
//! cargo run -p kgqa --example trace_replay
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use kgqa::kg::load_graph;
use kgqa::matching::TableMatcher;
use kgqa::metrics::FlopsEstimator;
use kgqa::plan::ScriptedPlanner;
use kgqa::reflect::{run_pipeline, PipelineConfig};
use kgqa::trace::{read_trace, replay_answer, TraceWriter};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo")
        .join(name)
}

fn main() -> kgqa::Result<()> {
    let graph = load_graph(&fixture("graph.tsv"), Some(&fixture("meta.tsv")))?;
    let planner = ScriptedPlanner::from_path(&fixture("planner.json"))?;
    let matcher = TableMatcher::from_path(&fixture("matcher.json"))?;

    let trace_path = std::env::temp_dir().join("kgqa_trace_replay_example.jsonl");
    let writer = TraceWriter::to_file(&trace_path, FlopsEstimator::default())?;

    let question = "Which scientist was honored by both the Royal Society and the Astronomy Guild?";
    let run = run_pipeline(
        &graph,
        &planner,
        &matcher,
        question,
        &PipelineConfig::default(),
        Some(&writer),
    )?;
    writer.finish()?;

    let events = read_trace(&trace_path)?;
    let mut by_kind: BTreeMap<String, usize> = BTreeMap::new();
    for event in &events {
        *by_kind
            .entry(serde_json::to_value(event.kind).unwrap().as_str().unwrap().to_string())
            .or_default() += 1;
    }
    println!("trace written to {} ({} events)", trace_path.display(), events.len());
    for (kind, count) in &by_kind {
        println!("  {kind:<12} {count}");
    }

    let summary = replay_answer(&events)?;
    println!("\nreplayed answer:  {:?}", summary.final_entities);
    println!(
        "recorded answer:  {:?}",
        run.answer().map(|a| a.final_entities.clone()).unwrap_or_default()
    );
    println!("replay agrees with the recorded outcome.");
    Ok(())
}

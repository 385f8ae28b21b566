//! Batch evaluation over a line-delimited dataset: per-question Hits@1,
//! call counts, FLOPs, and (where gold paths are supplied) pruning recall
//! and cost efficiency.
//!
//! ```bash
//! cargo run -p kgqa --example eval_dataset
//! ```

use std::path::PathBuf;

use kgqa::cli::{cmd_eval, MatcherSelector, PlannerSelector, RunConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo")
        .join(name)
}

fn main() -> kgqa::Result<()> {
    let mut config = RunConfig::new(
        fixture("graph.tsv"),
        PlannerSelector::Scripted(fixture("planner.json")),
        MatcherSelector::Table(fixture("matcher.json")),
    );
    config.meta_path = Some(fixture("meta.tsv"));
    config.workers = 4;

    let report = cmd_eval(&config, &fixture("dataset.jsonl"))?;

    println!("{:<4} {:<9} {:>5} {:>6} {:>7}  question", "hit", "status", "refl", "calls", "recall");
    for q in &report.questions {
        let recall = q
            .pruning_recall
            .map(|r| format!("{r:.2}"))
            .unwrap_or_else(|| "n/a".to_string());
        let short: String = q.question.chars().take(48).collect();
        println!(
            "{:<4} {:<9} {:>5} {:>6} {:>7}  {short}",
            q.hits_at_1, q.status, q.reflections, q.llm_calls, recall
        );
    }
    let agg = &report.aggregate;
    println!(
        "\naggregate over {} questions: hits@1 {:.3}, answered {}, avg calls {:.2}, avg flops {:.3e}",
        agg.questions, agg.hits_at_1, agg.answered, agg.avg_llm_calls, agg.avg_flops_estimate
    );
    if let Some(recall) = agg.avg_pruning_recall {
        println!(
            "gold-path questions: avg recall {recall:.3}, avg cost efficiency {:.3e}",
            agg.avg_cost_efficiency.unwrap_or_default()
        );
    }
    Ok(())
}

//! Remote backends over the chat-completions wire protocol. Configuration
//! comes from three environment variables:
//!
//! - `KGQA_API_BASE` — service base URL (requests go to `{base}/chat/completions`)
//! - `KGQA_API_KEY`  — bearer token
//! - `KGQA_MODEL`    — model name sent in the request body
//!
//! Without them this example prints the setup instructions and exits; with
//! them it plans one question remotely against the bundled graph.
//!
//! ```bash
//! cargo run -p kgqa --example remote_backend
//! ```

use std::path::PathBuf;

use kgqa::kg::load_graph;
use kgqa::matching::LexicalMatcher;
use kgqa::plan::RemotePlanner;
use kgqa::reflect::{run_pipeline, PipelineConfig, PipelineOutcome};
use kgqa::remote::{ENV_API_BASE, ENV_API_KEY, ENV_MODEL};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo")
        .join(name)
}

fn main() -> kgqa::Result<()> {
    let configured = [ENV_API_BASE, ENV_API_KEY, ENV_MODEL]
        .iter()
        .all(|v| std::env::var(v).is_ok());
    if !configured {
        println!("remote backends are configured through environment variables:");
        println!("  export {ENV_API_BASE}=https://your-endpoint/v1");
        println!("  export {ENV_API_KEY}=sk-...");
        println!("  export {ENV_MODEL}=your-model-name");
        println!();
        println!("the planner sends one chat-completions request per plan version,");
        println!("one per revision, and one per aggregation; transient failures are");
        println!("retried with exponential backoff. set the variables and rerun.");
        return Ok(());
    }

    let graph = load_graph(&fixture("graph.tsv"), Some(&fixture("meta.tsv")))?;
    let planner = RemotePlanner::from_env()?;
    let matcher = LexicalMatcher::with_defaults();
    let question = "Where did the 'Country Nation World Tour' concert artist go to college?";
    println!("planning remotely: {question}");
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
            println!("answer: {answer_text}");
            println!("entities: {:?}", answer.final_entities);
        }
        PipelineOutcome::Failed { failure } => {
            println!("failed ({:?}): {}", failure.kind, failure.reason);
        }
    }
    println!(
        "ledger: {} calls, {} prompt + {} completion tokens",
        run.ledger.llm_calls, run.ledger.prompt_tokens, run.ledger.completion_tokens
    );
    Ok(())
}

//! Planner backend over the chat-completions wire protocol.

use crate::error::{Error, Result};
use crate::metrics::CostLedger;
use crate::remote::{extract_json_object, ChatClient};

use super::prompts;
use super::{AggregateContext, CluePrompt, Plan, PlanDoc, Planner};

pub struct RemotePlanner {
    client: ChatClient,
}

impl RemotePlanner {
    pub fn new(client: ChatClient) -> Self {
        RemotePlanner { client }
    }

    pub fn from_env() -> Result<Self> {
        Ok(RemotePlanner::new(ChatClient::from_env()?))
    }

    fn request_plan(&self, user_prompt: &str, iteration: u32, ledger: &CostLedger) -> Result<Plan> {
        let completion = self.client.complete(prompts::SYSTEM, user_prompt)?;
        ledger.record_llm_call(completion.prompt_tokens, completion.completion_tokens);
        let value = extract_json_object(&completion.content)?;
        let doc: PlanDoc = serde_json::from_value(value)
            .map_err(|e| Error::PlanFormat(format!("plan document does not match schema: {e}")))?;
        doc.into_plan(iteration)
    }
}

impl Planner for RemotePlanner {
    fn name(&self) -> &str {
        "remote"
    }

    fn initial_plan(&self, query: &str, ledger: &CostLedger) -> Result<Plan> {
        self.request_plan(&prompts::render_plan(query), 0, ledger)
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
        self.request_plan(
            &prompts::render_revise(query, prev, clues),
            prev.iteration + 1,
            ledger,
        )
    }

    fn render_aggregate(
        &self,
        query: &str,
        ctx: &AggregateContext,
        ledger: &CostLedger,
    ) -> Result<String> {
        let completion = self
            .client
            .complete(prompts::SYSTEM, &prompts::render_aggregate(query, ctx))?;
        ledger.record_llm_call(completion.prompt_tokens, completion.completion_tokens);
        Ok(completion.content.trim().to_string())
    }
}

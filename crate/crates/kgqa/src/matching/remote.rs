//! Matcher backend over the chat-completions wire protocol.
//!
//! Entity mentions sent for typing or matching are wrapped in reserved
//! `[ENT] ... [/ENT]` markers so the service can locate the span to
//! classify. The local type gate still applies on top of the remote
//! decision: a reply can never force a match across disjoint coarse types.

use std::collections::BTreeSet;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kg::Entity;
use crate::plan::SimulatedAnswer;
use crate::remote::{extract_json_object, ChatClient};

use super::{coarse_overlap, fine_overlap, MatchKind, MatchVerdict, Matcher, TypeTaxonomy, OTHER};

const TYPING_TEMPLATE: &str = include_str!("../../assets/prompts/typing.txt");
const MATCHING_TEMPLATE: &str = include_str!("../../assets/prompts/matching.txt");

#[derive(Debug, Deserialize)]
struct TypingReply {
    #[serde(default)]
    types: BTreeSet<String>,
}

#[derive(Debug, Deserialize)]
struct MatchReply {
    matched: bool,
    #[serde(default)]
    score: f64,
    #[serde(default)]
    rationale: String,
}

pub struct RemoteMatcher {
    client: ChatClient,
    taxonomy: TypeTaxonomy,
}

impl RemoteMatcher {
    pub fn new(client: ChatClient, taxonomy: TypeTaxonomy) -> Self {
        RemoteMatcher { client, taxonomy }
    }

    pub fn from_env() -> Result<Self> {
        Ok(RemoteMatcher::new(
            ChatClient::from_env()?,
            TypeTaxonomy::builtin().clone(),
        ))
    }

    fn infer_types(&self, entity: &Entity) -> Result<BTreeSet<String>> {
        let text = format!(
            "[ENT] {} [/ENT] {}",
            entity.label,
            entity.description
        );
        let prompt = TYPING_TEMPLATE
            .replace("{text}", &text)
            .replace("{taxonomy}", &self.taxonomy.labels().collect::<Vec<_>>().join("\n"));
        let completion = self.client.complete(
            "You assign fine-grained entity types. Reply with JSON only.",
            &prompt,
        )?;
        let value = extract_json_object(&completion.content)?;
        let reply: TypingReply = serde_json::from_value(value)
            .map_err(|e| Error::PlanFormat(format!("typing reply does not match schema: {e}")))?;
        let kept: BTreeSet<String> = reply
            .types
            .into_iter()
            .filter(|t| self.taxonomy.contains(t))
            .collect();
        Ok(kept)
    }
}

impl Matcher for RemoteMatcher {
    fn name(&self) -> &str {
        "remote"
    }

    fn type_of(&self, entity: &Entity) -> Result<BTreeSet<String>> {
        if !entity.fine_types.is_empty() {
            return Ok(entity.fine_types.clone());
        }
        let inferred = self.infer_types(entity)?;
        if inferred.is_empty() {
            return Ok(BTreeSet::from([OTHER.to_string()]));
        }
        Ok(inferred)
    }

    fn match_entity(
        &self,
        _kind: MatchKind,
        candidate: &Entity,
        answer: &SimulatedAnswer,
        spec: &str,
    ) -> Result<MatchVerdict> {
        let candidate_types = self.type_of(candidate)?;
        let fine = fine_overlap(&candidate_types, &answer.expected_types);
        let coarse = coarse_overlap(&candidate_types, &answer.expected_types);
        if coarse.is_empty() {
            return Ok(MatchVerdict::unmatched(
                "no coarse-type overlap (gate applied before remote call)",
            ));
        }
        let prompt = MATCHING_TEMPLATE
            .replace("{label}", &candidate.label)
            .replace("{description}", &candidate.description)
            .replace(
                "{candidate_types}",
                &candidate_types.iter().cloned().collect::<Vec<_>>().join(", "),
            )
            .replace("{answer}", &answer.text)
            .replace(
                "{expected_types}",
                &answer
                    .expected_types
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", "),
            )
            .replace("{spec}", spec);
        let completion = self.client.complete(
            "You judge semantic matches between entities and expected answers. Reply with JSON only.",
            &prompt,
        )?;
        let value = extract_json_object(&completion.content)?;
        let reply: MatchReply = serde_json::from_value(value)
            .map_err(|e| Error::PlanFormat(format!("match reply does not match schema: {e}")))?;
        let overlap = if fine.is_empty() { coarse } else { fine };
        Ok(MatchVerdict {
            matched: reply.matched,
            score: reply.score.clamp(0.0, 1.0),
            type_overlap: overlap,
            rationale: if reply.rationale.is_empty() {
                "remote verdict".to_string()
            } else {
                reply.rationale
            },
        })
    }
}

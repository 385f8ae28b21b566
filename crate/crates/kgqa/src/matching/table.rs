//! Fixture-driven matcher. The table is the ground truth for tests: verdicts
//! are exactly its entries, and anything absent is unmatched with score 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{Entity, EntityId};
use crate::plan::SimulatedAnswer;

use super::{fine_overlap, metadata_types_or_other, MatchKind, MatchVerdict, Matcher, OTHER};

/// One scripted verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub matched: bool,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ForwardRow {
    entity: EntityId,
    sub_question: usize,
    matched: bool,
    score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QualifierRow {
    entity: EntityId,
    qualifier: usize,
    matched: bool,
    score: f64,
}

/// On-disk fixture: forward entries keyed by (entity id, sub-question index),
/// qualifier entries keyed by (entity id, qualifier index), and an optional
/// `types` section supplying inferred labels for entities without metadata.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct TableDoc {
    #[serde(default)]
    matches: Vec<ForwardRow>,
    #[serde(default)]
    qualifiers: Vec<QualifierRow>,
    #[serde(default)]
    types: BTreeMap<EntityId, BTreeSet<String>>,
}

#[derive(Debug)]
pub struct TableMatcher {
    forward: BTreeMap<(EntityId, usize), TableEntry>,
    qualifier: BTreeMap<(EntityId, usize), TableEntry>,
    types: BTreeMap<EntityId, BTreeSet<String>>,
}

impl TableMatcher {
    pub fn from_path(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&content)
    }

    pub fn from_json(content: &str) -> Result<Self> {
        let doc: TableDoc = serde_json::from_str(content)
            .map_err(|e| Error::Config(format!("invalid matcher table: {e}")))?;
        let mut forward = BTreeMap::new();
        for row in doc.matches {
            check_score(row.score)?;
            let key = (row.entity.clone(), row.sub_question);
            if forward
                .insert(key, TableEntry { matched: row.matched, score: row.score })
                .is_some()
            {
                return Err(Error::Config(format!(
                    "duplicate table entry for ({}, sub-question {})",
                    row.entity, row.sub_question
                )));
            }
        }
        let mut qualifier = BTreeMap::new();
        for row in doc.qualifiers {
            check_score(row.score)?;
            let key = (row.entity.clone(), row.qualifier);
            if qualifier
                .insert(key, TableEntry { matched: row.matched, score: row.score })
                .is_some()
            {
                return Err(Error::Config(format!(
                    "duplicate table entry for ({}, qualifier {})",
                    row.entity, row.qualifier
                )));
            }
        }
        Ok(TableMatcher {
            forward,
            qualifier,
            types: doc.types,
        })
    }

    /// Build a table programmatically: forward entries keyed by
    /// (entity, sub-question index).
    pub fn from_entries(entries: impl IntoIterator<Item = ((EntityId, usize), TableEntry)>) -> Self {
        TableMatcher {
            forward: entries.into_iter().collect(),
            qualifier: BTreeMap::new(),
            types: BTreeMap::new(),
        }
    }

    pub fn with_qualifier_entries(
        mut self,
        entries: impl IntoIterator<Item = ((EntityId, usize), TableEntry)>,
    ) -> Self {
        self.qualifier = entries.into_iter().collect();
        self
    }
}

fn check_score(score: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::Config(format!("table score {score} outside [0, 1]")));
    }
    Ok(())
}

impl Matcher for TableMatcher {
    fn name(&self) -> &str {
        "table"
    }

    fn type_of(&self, entity: &Entity) -> Result<BTreeSet<String>> {
        if !entity.fine_types.is_empty() {
            return Ok(entity.fine_types.clone());
        }
        if let Some(types) = self.types.get(&entity.id) {
            if !types.is_empty() {
                return Ok(types.clone());
            }
        }
        Ok(BTreeSet::from([OTHER.to_string()]))
    }

    fn match_entity(
        &self,
        kind: MatchKind,
        candidate: &Entity,
        answer: &SimulatedAnswer,
        _spec: &str,
    ) -> Result<MatchVerdict> {
        let entry = match kind {
            MatchKind::Forward { sub_question } => self
                .forward
                .get(&(candidate.id.clone(), sub_question)),
            MatchKind::Qualifier { qualifier } => self
                .qualifier
                .get(&(candidate.id.clone(), qualifier)),
        };
        match entry {
            Some(entry) => {
                let overlap = if entry.matched {
                    let fine = fine_overlap(
                        &metadata_types_or_other(candidate),
                        &answer.expected_types,
                    );
                    if fine.is_empty() {
                        answer.expected_types.clone()
                    } else {
                        fine
                    }
                } else {
                    BTreeSet::new()
                };
                Ok(MatchVerdict {
                    matched: entry.matched,
                    score: entry.score,
                    type_overlap: overlap,
                    rationale: "table fixture entry".to_string(),
                })
            }
            None => Ok(MatchVerdict::unmatched("no table entry")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entity(id: &str) -> Entity {
        Entity::bare(id)
    }

    fn answer() -> SimulatedAnswer {
        SimulatedAnswer {
            text: "x".to_string(),
            expected_types: BTreeSet::from(["person".to_string()]),
        }
    }

    #[test]
    fn verdicts_are_exactly_fixture_entries() {
        let m = TableMatcher::from_json(
            r#"{"matches":[{"entity":"a","sub_question":1,"matched":true,"score":0.75}]}"#,
        )
        .unwrap();
        let v = m
            .match_entity(MatchKind::Forward { sub_question: 1 }, &entity("a"), &answer(), "")
            .unwrap();
        assert!(v.matched);
        assert_eq!(v.score, 0.75);
    }

    #[test]
    fn absent_key_is_unmatched_score_zero() {
        let m = TableMatcher::from_json(r#"{}"#).unwrap();
        let v = m
            .match_entity(MatchKind::Forward { sub_question: 1 }, &entity("a"), &answer(), "")
            .unwrap();
        assert!(!v.matched);
        assert_eq!(v.score, 0.0);
    }

    #[test]
    fn qualifier_entries_are_keyed_separately() {
        let m = TableMatcher::from_json(
            r#"{
                "matches":[{"entity":"a","sub_question":1,"matched":true,"score":1.0}],
                "qualifiers":[{"entity":"a","qualifier":1,"matched":false,"score":0.0}]
            }"#,
        )
        .unwrap();
        let fwd = m
            .match_entity(MatchKind::Forward { sub_question: 1 }, &entity("a"), &answer(), "")
            .unwrap();
        let qual = m
            .match_entity(MatchKind::Qualifier { qualifier: 1 }, &entity("a"), &answer(), "")
            .unwrap();
        assert!(fwd.matched);
        assert!(!qual.matched);
    }

    #[test]
    fn types_section_feeds_type_of() {
        let m = TableMatcher::from_json(r#"{"types":{"a":["location/city"]}}"#).unwrap();
        assert_eq!(
            m.type_of(&entity("a")).unwrap(),
            BTreeSet::from(["location/city".to_string()])
        );
        assert_eq!(
            m.type_of(&entity("b")).unwrap(),
            BTreeSet::from(["other".to_string()])
        );
    }

    #[test]
    fn metadata_types_take_precedence_over_table_types() {
        let m = TableMatcher::from_json(r#"{"types":{"a":["location/city"]}}"#).unwrap();
        let mut e = entity("a");
        e.fine_types = BTreeSet::from(["person".to_string()]);
        assert_eq!(
            m.type_of(&e).unwrap(),
            BTreeSet::from(["person".to_string()])
        );
    }

    #[test]
    fn duplicate_entries_rejected() {
        let err = TableMatcher::from_json(
            r#"{"matches":[
                {"entity":"a","sub_question":1,"matched":true,"score":1.0},
                {"entity":"a","sub_question":1,"matched":false,"score":0.0}
            ]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn out_of_range_score_rejected() {
        let err = TableMatcher::from_json(
            r#"{"matches":[{"entity":"a","sub_question":1,"matched":true,"score":1.5}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("outside"));
    }
}

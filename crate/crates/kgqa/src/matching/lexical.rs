//! Offline lexical matcher: fine-grained type gate plus token-set Jaccard
//! similarity.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::kg::Entity;
use crate::plan::SimulatedAnswer;

use super::{
    coarse_overlap, fine_overlap, metadata_types_or_other, MatchKind, MatchThresholds,
    MatchVerdict, Matcher, TypeTaxonomy,
};

/// Deterministic matcher used when no trained plug-in model is available.
///
/// The score is the token-set Jaccard similarity between
/// `candidate.label + candidate.description` and `answer.text + spec`,
/// computed after lowercasing and whitespace tokenization (punctuation is
/// not stripped). The decision combines that score with a type gate:
///
/// - fine-level overlap (exact shared labels) admits at `tau`;
/// - coarse-only overlap (shared root segment) admits at `tau_coarse`;
/// - no coarse overlap never admits, whatever the text similarity.
pub struct LexicalMatcher {
    taxonomy: TypeTaxonomy,
    thresholds: MatchThresholds,
}

impl LexicalMatcher {
    pub fn new(taxonomy: TypeTaxonomy, thresholds: MatchThresholds) -> Self {
        LexicalMatcher {
            taxonomy,
            thresholds,
        }
    }

    pub fn with_defaults() -> Self {
        LexicalMatcher::new(TypeTaxonomy::builtin().clone(), MatchThresholds::default())
    }

    pub fn taxonomy(&self) -> &TypeTaxonomy {
        &self.taxonomy
    }

    pub fn thresholds(&self) -> MatchThresholds {
        self.thresholds
    }
}

/// Token-set Jaccard similarity after lowercasing and whitespace splitting.
/// Returns 0.0 when both sides are empty.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let ta = tokens(a);
    let tb = tokens(b);
    let union = ta.union(&tb).count();
    if union == 0 {
        return 0.0;
    }
    let inter = ta.intersection(&tb).count();
    inter as f64 / union as f64
}

fn tokens(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .map(|t| t.to_lowercase())
        .collect()
}

impl Matcher for LexicalMatcher {
    fn name(&self) -> &str {
        "lexical"
    }

    fn type_of(&self, entity: &Entity) -> Result<BTreeSet<String>> {
        Ok(metadata_types_or_other(entity))
    }

    fn match_entity(
        &self,
        _kind: MatchKind,
        candidate: &Entity,
        answer: &SimulatedAnswer,
        spec: &str,
    ) -> Result<MatchVerdict> {
        let candidate_types = metadata_types_or_other(candidate);
        let fine = fine_overlap(&candidate_types, &answer.expected_types);
        let coarse = coarse_overlap(&candidate_types, &answer.expected_types);

        let candidate_text = format!("{} {}", candidate.label, candidate.description);
        let answer_text = format!("{} {}", answer.text, spec);
        let score = jaccard(&candidate_text, &answer_text);

        let (matched, overlap, why) = if !fine.is_empty() && score >= self.thresholds.tau {
            (
                true,
                fine,
                format!("fine-type overlap, jaccard {score:.4} >= {}", self.thresholds.tau),
            )
        } else if fine.is_empty() && !coarse.is_empty() && score >= self.thresholds.tau_coarse {
            (
                true,
                coarse,
                format!(
                    "coarse-type overlap, jaccard {score:.4} >= {}",
                    self.thresholds.tau_coarse
                ),
            )
        } else if coarse.is_empty() {
            (false, BTreeSet::new(), "no coarse-type overlap".to_string())
        } else {
            let overlap = if fine.is_empty() { coarse } else { fine };
            (
                false,
                overlap,
                format!("type overlap but jaccard {score:.4} below threshold"),
            )
        };

        Ok(MatchVerdict {
            matched,
            score,
            type_overlap: overlap,
            rationale: why,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entity(label: &str, desc: &str, types: &[&str]) -> Entity {
        Entity {
            id: label.to_lowercase().replace(' ', "_"),
            label: label.to_string(),
            description: desc.to_string(),
            fine_types: types.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn answer(text: &str, types: &[&str]) -> SimulatedAnswer {
        SimulatedAnswer {
            text: text.to_string(),
            expected_types: types.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn forward() -> MatchKind {
        MatchKind::Forward { sub_question: 1 }
    }

    #[test]
    fn exact_match_ceiling() {
        let m = LexicalMatcher::with_defaults();
        let v = m
            .match_entity(
                forward(),
                &entity("Belmont University", "", &["organization/education/college"]),
                &answer("Belmont University", &["organization/education/college"]),
                "",
            )
            .unwrap();
        assert!(v.matched);
        assert_eq!(v.score, 1.0);
        assert!(v.type_overlap.contains("organization/education/college"));
    }

    #[test]
    fn coarse_disjoint_types_never_match() {
        let m = LexicalMatcher::with_defaults();
        let v = m
            .match_entity(
                forward(),
                &entity("Summer Games", "quadrennial sports event", &["event/sports_event"]),
                &answer("Summer Games quadrennial sports event", &["person/athlete"]),
                "",
            )
            .unwrap();
        assert!(!v.matched, "type gate must override text similarity");
        assert!(v.type_overlap.is_empty());
    }

    #[test]
    fn stale_text_same_type_still_matches() {
        // The simulated answer guesses the wrong year's event name; the shared
        // event type plus near-identical wording carries the match.
        let m = LexicalMatcher::with_defaults();
        let v = m
            .match_entity(
                forward(),
                &entity("2022 World Cup", "", &["event/sports_event"]),
                &answer("2018 World Cup", &["event/sports_event"]),
                "",
            )
            .unwrap();
        // tokens {2022, world, cup} vs {2018, world, cup}: jaccard 2/4 = 0.5
        assert_eq!(v.score, 0.5);
        assert!(v.matched);
    }

    #[test]
    fn score_is_hand_computable_jaccard() {
        let m = LexicalMatcher::with_defaults();
        let v = m
            .match_entity(
                forward(),
                &entity("Glass Harbor", "indie rock band", &["organization/music"]),
                &answer("glass harbor", &["organization/music"]),
                "band",
            )
            .unwrap();
        // candidate tokens: {glass, harbor, indie, rock, band}
        // answer tokens:    {glass, harbor, band}
        // jaccard = 3 / 5
        assert!((v.score - 0.6).abs() < 1e-12);
        assert!(v.matched);
    }

    #[test]
    fn text_only_similarity_never_passes_default_thresholds() {
        let m = LexicalMatcher::with_defaults();
        // identical text but unrelated coarse types
        let v = m
            .match_entity(
                forward(),
                &entity("Mercury", "", &["location/celestial"]),
                &answer("Mercury", &["product/car"]),
                "",
            )
            .unwrap();
        assert!(!v.matched);
        assert_eq!(v.score, 1.0);
    }

    #[test]
    fn coarse_overlap_requires_strict_threshold() {
        let m = LexicalMatcher::with_defaults();
        // shared coarse root `person`, no shared fine label
        let candidate = entity("Ada Quinn", "violinist", &["person/artist/music"]);
        let low = m
            .match_entity(forward(), &candidate, &answer("Ada Quinn composer", &["person/artist/author"]), "")
            .unwrap();
        assert!(!low.matched, "jaccard 2/4 is below tau_coarse");
        let high = m
            .match_entity(forward(), &candidate, &answer("Ada Quinn violinist", &["person/artist/author"]), "")
            .unwrap();
        assert!(high.matched, "jaccard 1.0 passes tau_coarse");
        assert_eq!(high.type_overlap, BTreeSet::from(["person".to_string()]));
    }

    #[test]
    fn untyped_candidate_falls_back_to_other() {
        let m = LexicalMatcher::with_defaults();
        let e = entity("Mystery Node", "", &[]);
        assert_eq!(
            m.type_of(&e).unwrap(),
            BTreeSet::from(["other".to_string()])
        );
        let v = m
            .match_entity(forward(), &e, &answer("Mystery Node", &["person"]), "")
            .unwrap();
        assert!(!v.matched, "`other` does not overlap `person`");
    }

    #[test]
    fn deterministic_for_identical_inputs() {
        let m = LexicalMatcher::with_defaults();
        let c = entity("Nora Vale", "lead singer and cellist", &["person/artist/music"]);
        let a = answer("Nora Vale singer", &["person/artist/music"]);
        let v1 = m.match_entity(forward(), &c, &a, "lead").unwrap();
        let v2 = m.match_entity(forward(), &c, &a, "lead").unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn jaccard_empty_sides() {
        assert_eq!(jaccard("", ""), 0.0);
        assert_eq!(jaccard("a", ""), 0.0);
        assert_eq!(jaccard("a b", "a b"), 1.0);
    }

    proptest::proptest! {
        #[test]
        fn score_always_in_unit_interval(a in "[a-z ]{0,30}", b in "[a-z ]{0,30}") {
            let s = jaccard(&a, &b);
            proptest::prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}

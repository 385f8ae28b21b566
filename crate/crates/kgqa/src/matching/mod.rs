//! Semantic matching between candidate entities and simulated answers.
//!
//! A match verdict gates graph exploration: a relation is only expanded when
//! its representative tail matches the simulated answer for the current
//! sub-question. Three backends are provided:
//!
//! - [`TableMatcher`] — fixture-driven ground truth for tests and oracles;
//! - [`LexicalMatcher`] — deterministic offline default: type gate plus
//!   token-set Jaccard similarity;
//! - [`RemoteMatcher`] — delegates typing and matching to a chat-completions
//!   service (see [`crate::remote`]).
//!
//! [`AlwaysMatcher`] (admit everything) and [`FlakyMatcher`] (seeded false
//! negatives) support oracle-equivalence and recall-degradation experiments.

mod lexical;
mod remote;
mod table;
pub mod taxonomy;

use std::collections::BTreeSet;
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kg::Entity;
use crate::metrics::CostLedger;
use crate::plan::SimulatedAnswer;

pub use lexical::{jaccard, LexicalMatcher};
pub use remote::RemoteMatcher;
pub use table::{TableEntry, TableMatcher};
pub use taxonomy::{TypeTaxonomy, OTHER};

/// What a match call is deciding, and the fixture key it resolves under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    /// Forward-search admission for the sub-question with this 1-based index.
    Forward { sub_question: usize },
    /// Adverbial-qualifier check for the qualifier with this 1-based index.
    Qualifier { qualifier: usize },
}

/// Outcome of one match decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchVerdict {
    pub matched: bool,
    /// Similarity score in [0, 1].
    pub score: f64,
    /// Shared type labels that supported the decision (fine labels when they
    /// intersect, otherwise shared coarse roots).
    pub type_overlap: BTreeSet<String>,
    /// Short human-readable justification, carried into traces.
    pub rationale: String,
}

impl MatchVerdict {
    pub fn unmatched(rationale: impl Into<String>) -> Self {
        MatchVerdict {
            matched: false,
            score: 0.0,
            type_overlap: BTreeSet::new(),
            rationale: rationale.into(),
        }
    }
}

/// Decision thresholds for semantic backends.
///
/// Fine-level type overlap admits at `tau`; coarse-only overlap needs the
/// stricter `tau_coarse`. Defaults are chosen so that exact-type matches with
/// identical text always pass and text similarity alone never does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchThresholds {
    pub tau: f64,
    pub tau_coarse: f64,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        MatchThresholds {
            tau: 0.5,
            tau_coarse: 0.8,
        }
    }
}

/// A matching backend. Implementations must tolerate concurrent calls;
/// the offline backends are pure functions of their inputs.
pub trait Matcher: Send + Sync {
    fn name(&self) -> &str;

    /// Type labels for an entity: metadata types when present, otherwise
    /// backend-inferred labels, otherwise the `other` root. Never empty.
    fn type_of(&self, entity: &Entity) -> Result<BTreeSet<String>>;

    /// Decide whether `candidate` matches the simulated answer under the
    /// free-text guidance `spec`.
    fn match_entity(
        &self,
        kind: MatchKind,
        candidate: &Entity,
        answer: &SimulatedAnswer,
        spec: &str,
    ) -> Result<MatchVerdict>;
}

/// Issue a match call and account for it on the ledger.
pub fn counted_match(
    matcher: &dyn Matcher,
    ledger: &CostLedger,
    kind: MatchKind,
    candidate: &Entity,
    answer: &SimulatedAnswer,
    spec: &str,
) -> Result<MatchVerdict> {
    ledger.record_matcher_invocation();
    matcher.match_entity(kind, candidate, answer, spec)
}

/// Metadata types when present, otherwise the `other` root. The shared
/// fallback used by offline backends.
pub(crate) fn metadata_types_or_other(entity: &Entity) -> BTreeSet<String> {
    if entity.fine_types.is_empty() {
        BTreeSet::from([OTHER.to_string()])
    } else {
        entity.fine_types.clone()
    }
}

/// Exact fine-label intersection between candidate types and expected types.
pub(crate) fn fine_overlap(
    candidate: &BTreeSet<String>,
    expected: &BTreeSet<String>,
) -> BTreeSet<String> {
    candidate.intersection(expected).cloned().collect()
}

/// Shared coarse roots between candidate types and expected types.
pub(crate) fn coarse_overlap(
    candidate: &BTreeSet<String>,
    expected: &BTreeSet<String>,
) -> BTreeSet<String> {
    let c: BTreeSet<&str> = candidate.iter().map(|l| taxonomy::coarse(l)).collect();
    let e: BTreeSet<&str> = expected.iter().map(|l| taxonomy::coarse(l)).collect();
    c.intersection(&e).map(|s| s.to_string()).collect()
}

/// Matcher that admits everything with score 1.0. Used for oracle-equivalence
/// runs where exploration must enumerate exactly what the brute-force oracle
/// does.
#[derive(Debug, Default)]
pub struct AlwaysMatcher;

impl Matcher for AlwaysMatcher {
    fn name(&self) -> &str {
        "always"
    }

    fn type_of(&self, entity: &Entity) -> Result<BTreeSet<String>> {
        Ok(metadata_types_or_other(entity))
    }

    fn match_entity(
        &self,
        _kind: MatchKind,
        candidate: &Entity,
        answer: &SimulatedAnswer,
        _spec: &str,
    ) -> Result<MatchVerdict> {
        let candidate_types = metadata_types_or_other(candidate);
        let fine = fine_overlap(&candidate_types, &answer.expected_types);
        let overlap = if fine.is_empty() {
            answer.expected_types.clone()
        } else {
            fine
        };
        Ok(MatchVerdict {
            matched: true,
            score: 1.0,
            type_overlap: overlap,
            rationale: "always-match backend".to_string(),
        })
    }
}

/// Wrapper that forces a seeded fraction of match calls to come back
/// unmatched, for recall-degradation experiments. Type queries pass through.
///
/// The false-negative draws consume a deterministic RNG stream, so results
/// are reproducible only when calls arrive in a fixed order (exploration is
/// sequential, so single-threaded use is deterministic).
pub struct FlakyMatcher<M> {
    inner: M,
    rate: f64,
    rng: Mutex<ChaCha8Rng>,
}

impl<M: Matcher> FlakyMatcher<M> {
    pub fn new(inner: M, false_negative_rate: f64, seed: u64) -> Self {
        FlakyMatcher {
            inner,
            rate: false_negative_rate,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

impl<M: Matcher> Matcher for FlakyMatcher<M> {
    fn name(&self) -> &str {
        "flaky"
    }

    fn type_of(&self, entity: &Entity) -> Result<BTreeSet<String>> {
        self.inner.type_of(entity)
    }

    fn match_entity(
        &self,
        kind: MatchKind,
        candidate: &Entity,
        answer: &SimulatedAnswer,
        spec: &str,
    ) -> Result<MatchVerdict> {
        let draw: f64 = self.rng.lock().unwrap().gen();
        if draw < self.rate {
            return Ok(MatchVerdict::unmatched("injected false negative"));
        }
        self.inner.match_entity(kind, candidate, answer, spec)
    }
}

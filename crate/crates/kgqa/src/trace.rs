//! Line-delimited trace of every pipeline decision, plus a replay utility
//! that reconstructs the answer from the events alone.
//!
//! Events are JSON records, UTF-8, LF-terminated, with strictly increasing
//! sequence numbers. Exploration events are buffered per seed and flushed in
//! seed order after the per-seed runs complete, so traces are byte-identical
//! across runs regardless of scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::metrics::{CostLedger, FlopsEstimator, LedgerSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Plan,
    Instruction,
    Expand,
    Prune,
    Problem,
    Path,
    Aggregate,
    Reflect,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub sequence: u64,
    pub iteration: u32,
    pub kind: EventKind,
    pub payload: serde_json::Value,
    pub ledger: LedgerSnapshot,
}

/// Order-preserving buffer for events produced inside one seed exploration.
#[derive(Debug, Default)]
pub struct TraceBuffer {
    events: Mutex<Vec<(EventKind, serde_json::Value)>>,
}

impl TraceBuffer {
    pub fn new() -> Self {
        TraceBuffer::default()
    }

    pub fn push(&self, kind: EventKind, payload: serde_json::Value) {
        self.events.lock().unwrap().push((kind, payload));
    }

    pub fn drain(&self) -> Vec<(EventKind, serde_json::Value)> {
        std::mem::take(&mut *self.events.lock().unwrap())
    }
}

/// Serializer assigning sequence numbers at write time.
pub struct TraceWriter {
    out: Mutex<Box<dyn Write + Send>>,
    sequence: AtomicU64,
    estimator: FlopsEstimator,
}

impl TraceWriter {
    pub fn new(out: Box<dyn Write + Send>, estimator: FlopsEstimator) -> Self {
        TraceWriter {
            out: Mutex::new(out),
            sequence: AtomicU64::new(1),
            estimator,
        }
    }

    pub fn to_file(path: &Path, estimator: FlopsEstimator) -> Result<Self> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(TraceWriter::new(Box::new(BufWriter::new(file)), estimator))
    }

    pub fn emit(
        &self,
        iteration: u32,
        kind: EventKind,
        payload: serde_json::Value,
        ledger: &CostLedger,
    ) -> Result<()> {
        let event = TraceEvent {
            sequence: self.sequence.fetch_add(1, Ordering::SeqCst),
            iteration,
            kind,
            payload,
            ledger: ledger.snapshot(&self.estimator),
        };
        let line = serde_json::to_string(&event).expect("trace event serializes");
        let mut out = self.out.lock().unwrap();
        writeln!(out, "{line}").map_err(|e| Error::Io {
            path: "<trace sink>".into(),
            source: e,
        })
    }

    /// Write buffered exploration events in their recorded order.
    pub fn flush_buffer(
        &self,
        iteration: u32,
        buffer: &TraceBuffer,
        ledger: &CostLedger,
    ) -> Result<()> {
        for (kind, payload) in buffer.drain() {
            self.emit(iteration, kind, payload, ledger)?;
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<()> {
        self.out.lock().unwrap().flush().map_err(|e| Error::Io {
            path: "<trace sink>".into(),
            source: e,
        })
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceEvent>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&content, path)
}

pub fn parse_trace(content: &str, origin: &Path) -> Result<Vec<TraceEvent>> {
    let mut events = Vec::new();
    let mut last_sequence = 0u64;
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: TraceEvent = serde_json::from_str(line)
            .map_err(|e| Error::parse(origin, i + 1, format!("invalid trace event: {e}")))?;
        if event.sequence <= last_sequence {
            return Err(Error::parse(
                origin,
                i + 1,
                format!(
                    "sequence numbers must increase: {} after {last_sequence}",
                    event.sequence
                ),
            ));
        }
        last_sequence = event.sequence;
        events.push(event);
    }
    Ok(events)
}

/// Answer reconstructed from trace events alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub answered: bool,
    pub final_entities: Vec<EntityId>,
    pub confidence: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ValidatedPathView {
    seed: EntityId,
    terminal: EntityId,
    score: f64,
}

/// Re-derive the final answer from the last iteration's recorded decisions:
/// the plan's seed list plus the validated paths listed by the aggregate
/// event. The recomputed intersection/union ranking is cross-checked against
/// the recorded answer event; any disagreement is reported as a corrupt
/// trace.
pub fn replay_answer(events: &[TraceEvent]) -> Result<ReplaySummary> {
    let plan = events
        .iter()
        .rev()
        .find(|e| e.kind == EventKind::Plan)
        .ok_or_else(|| Error::Config("trace has no plan event".to_string()))?;
    let aggregate = events
        .iter()
        .rev()
        .find(|e| e.kind == EventKind::Aggregate)
        .ok_or_else(|| Error::Config("trace has no aggregate event".to_string()))?;
    let answer = events
        .iter()
        .rev()
        .find(|e| e.kind == EventKind::Answer)
        .ok_or_else(|| Error::Config("trace has no answer event".to_string()))?;

    let seeds: Vec<EntityId> = serde_json::from_value(
        plan.payload
            .get("seed_entities")
            .cloned()
            .unwrap_or_default(),
    )
    .map_err(|e| Error::Config(format!("plan event has no seed list: {e}")))?;
    let validated: Vec<ValidatedPathView> = serde_json::from_value(
        aggregate.payload.get("validated").cloned().unwrap_or_default(),
    )
    .map_err(|e| Error::Config(format!("aggregate event has no validated paths: {e}")))?;

    let mut per_seed: BTreeMap<&str, std::collections::BTreeSet<&str>> = BTreeMap::new();
    let mut best_score: BTreeMap<&str, f64> = BTreeMap::new();
    for seed in &seeds {
        per_seed.entry(seed.as_str()).or_default();
    }
    for v in &validated {
        per_seed.entry(v.seed.as_str()).or_default().insert(&v.terminal);
        let best = best_score.entry(v.terminal.as_str()).or_insert(v.score);
        if v.score > *best {
            *best = v.score;
        }
    }

    let mut summary = if validated.is_empty() {
        ReplaySummary {
            answered: false,
            final_entities: Vec::new(),
            confidence: None,
        }
    } else {
        let mut sets = per_seed.values();
        let first = sets.next().cloned().unwrap_or_default();
        let intersection = sets.fold(first, |acc, s| acc.intersection(s).cloned().collect());
        let (entities, confidence) = if intersection.is_empty() {
            let union: std::collections::BTreeSet<&str> =
                per_seed.values().flatten().cloned().collect();
            (union, "low")
        } else {
            (intersection, "high")
        };
        let mut ranked: Vec<&str> = entities.into_iter().collect();
        ranked.sort_by(|a, b| {
            let sa = best_score.get(a).copied().unwrap_or(0.0);
            let sb = best_score.get(b).copied().unwrap_or(0.0);
            sb.total_cmp(&sa).then_with(|| a.cmp(b))
        });
        ReplaySummary {
            answered: true,
            final_entities: ranked.into_iter().map(String::from).collect(),
            confidence: Some(confidence.to_string()),
        }
    };

    // cross-check against the recorded answer event
    let recorded_status = answer
        .payload
        .get("status")
        .and_then(|v| v.as_str())
        .unwrap_or_default();
    let recorded_final: Vec<EntityId> = serde_json::from_value(
        answer.payload.get("final_entities").cloned().unwrap_or_default(),
    )
    .unwrap_or_default();
    let recorded_answered = recorded_status == "answered";
    if recorded_answered != summary.answered || recorded_final != summary.final_entities {
        return Err(Error::Config(format!(
            "trace is internally inconsistent: replay derived {:?} but the answer event recorded {recorded_status} {recorded_final:?}",
            summary.final_entities
        )));
    }
    if !recorded_answered {
        summary.confidence = None;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snapshot() -> LedgerSnapshot {
        LedgerSnapshot {
            llm_calls: 0,
            prompt_tokens: 0,
            completion_tokens: 0,
            matcher_invocations: 0,
            flops_estimate: 0.0,
        }
    }

    fn event(sequence: u64, kind: EventKind, payload: serde_json::Value) -> TraceEvent {
        TraceEvent {
            sequence,
            iteration: 0,
            kind,
            payload,
            ledger: snapshot(),
        }
    }

    #[test]
    fn writer_assigns_increasing_sequences() {
        let buf: Vec<u8> = Vec::new();
        let shared = std::sync::Arc::new(Mutex::new(buf));
        struct SharedWriter(std::sync::Arc<Mutex<Vec<u8>>>);
        impl Write for SharedWriter {
            fn write(&mut self, data: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(data);
                Ok(data.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let writer = TraceWriter::new(
            Box::new(SharedWriter(shared.clone())),
            FlopsEstimator::default(),
        );
        let ledger = CostLedger::new();
        for kind in [EventKind::Plan, EventKind::Expand, EventKind::Answer] {
            writer.emit(0, kind, serde_json::json!({}), &ledger).unwrap();
        }
        writer.finish().unwrap();
        let content = String::from_utf8(shared.lock().unwrap().clone()).unwrap();
        let events = parse_trace(&content, Path::new("<mem>")).unwrap();
        assert_eq!(events.len(), 3);
        assert_eq!(
            events.iter().map(|e| e.sequence).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn non_increasing_sequence_rejected() {
        let line = serde_json::to_string(&event(1, EventKind::Plan, serde_json::json!({})))
            .unwrap();
        let content = format!("{line}\n{line}\n");
        assert!(parse_trace(&content, Path::new("<mem>")).is_err());
    }

    #[test]
    fn replay_reconstructs_intersection_answer() {
        let events = vec![
            event(
                1,
                EventKind::Plan,
                serde_json::json!({"seed_entities": ["s1", "s2"]}),
            ),
            event(
                2,
                EventKind::Aggregate,
                serde_json::json!({"outcome": "answer", "validated": [
                    {"seed": "s1", "terminal": "x", "score": 0.9, "triples": []},
                    {"seed": "s1", "terminal": "y", "score": 0.8, "triples": []},
                    {"seed": "s2", "terminal": "y", "score": 0.7, "triples": []},
                    {"seed": "s2", "terminal": "z", "score": 0.6, "triples": []}
                ]}),
            ),
            event(
                3,
                EventKind::Answer,
                serde_json::json!({"status": "answered", "final_entities": ["y"], "confidence": "high"}),
            ),
        ];
        let summary = replay_answer(&events).unwrap();
        assert!(summary.answered);
        assert_eq!(summary.final_entities, vec!["y".to_string()]);
        assert_eq!(summary.confidence.as_deref(), Some("high"));
    }

    #[test]
    fn replay_detects_inconsistent_trace() {
        let events = vec![
            event(1, EventKind::Plan, serde_json::json!({"seed_entities": ["s1"]})),
            event(
                2,
                EventKind::Aggregate,
                serde_json::json!({"outcome": "answer", "validated": [
                    {"seed": "s1", "terminal": "x", "score": 0.9, "triples": []}
                ]}),
            ),
            event(
                3,
                EventKind::Answer,
                serde_json::json!({"status": "answered", "final_entities": ["forged"]}),
            ),
        ];
        assert!(replay_answer(&events).is_err());
    }
}

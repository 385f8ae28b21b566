//! Plan-driven question answering over in-memory knowledge graphs.
//!
//! The engine runs a three-stage loop. A planner decomposes the question
//! into sub-questions with simulated answers and action instructions; a
//! constrained breadth-first exploration executes those instructions against
//! the graph, pruning relations whose representative tails fail semantic
//! matching; a reflection stage verifies and aggregates the surviving paths,
//! feeding problem reports back into bounded replanning when nothing
//! validates. A cost ledger accounts every backend call, token, and matcher
//! invocation, and a brute-force path oracle grounds recall and equivalence
//! checks.
//!
//! Everything runs fully offline with the scripted planner and the table or
//! lexical matchers; remote backends speak the chat-completions wire
//! protocol.
//!
//! # Modules
//!
//! - [`kg`] — immutable triple store with adjacency indices and metadata
//! - [`plan`] — plan types, validation, and planner backends
//! - [`matching`] — type taxonomy and matcher backends
//! - [`explore`] — pruned breadth-first search with qualifier checks
//! - [`reflect`] — path verification, aggregation, and the reflection loop
//! - [`metrics`] — cost ledger, FLOPs estimates, recall, and the path oracle
//! - [`trace`] — line-delimited decision traces and replay
//! - [`cli`] — run / eval / oracle entry points behind the `kgqa` binary
//!
//! # Examples
//!
//! One runnable example per capability lives in `examples/`:
//!
//! ```text
//! cargo run -p kgqa --example load_graph          # load and query a TSV graph
//! cargo run -p kgqa --example oracle_paths        # brute-force path enumeration
//! cargo run -p kgqa --example explore_pruning     # pruned BFS with the lexical matcher
//! cargo run -p kgqa --example scripted_pipeline   # full loop on the bundled fixtures
//! cargo run -p kgqa --example self_reflection     # plan revision walkthrough
//! cargo run -p kgqa --example reflection_sweep    # accuracy vs reflection cap
//! cargo run -p kgqa --example cost_metrics        # ledger, FLOPs, cost efficiency
//! cargo run -p kgqa --example eval_dataset        # dataset evaluation report
//! cargo run -p kgqa --example trace_replay        # trace a run, then replay it
//! cargo run -p kgqa --example remote_backend      # configure remote backends
//! ```

pub mod cli;
pub mod error;
pub mod explore;
pub mod kg;
pub mod matching;
pub mod metrics;
pub mod plan;
pub mod reflect;
pub mod remote;
pub mod trace;

pub use error::{Error, Result};

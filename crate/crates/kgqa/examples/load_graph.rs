//! Load a TSV knowledge graph with metadata and query it: adjacency in both
//! directions, entity metadata, and radius-bounded subgraph extraction.
//!
//! ```bash
//! cargo run -p kgqa --example load_graph
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use kgqa::kg::{load_graph, Direction};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo")
        .join(name)
}

fn main() -> kgqa::Result<()> {
    let graph = load_graph(&fixture("graph.tsv"), Some(&fixture("meta.tsv")))?;
    println!(
        "loaded {} entities, {} triples",
        graph.entity_count(),
        graph.triple_count()
    );

    let artist = graph.require_entity("brad_paisley")?;
    println!("\n{} ({})", artist.label, artist.id);
    println!("  types: {:?}", artist.fine_types);
    println!("  description: {}", artist.description);

    println!("\noutgoing edges of brad_paisley:");
    for (relation, tails) in graph.neighbors("brad_paisley", Direction::Outgoing)? {
        println!("  -[{relation}]-> {tails:?}");
    }
    println!("incoming edges of brad_paisley:");
    for (relation, heads) in graph.neighbors("brad_paisley", Direction::Incoming)? {
        println!("  <-[{relation}]- {heads:?}");
    }

    let seeds = BTreeSet::from(["copenhagen".to_string()]);
    let subgraph = graph.extract_subgraph(&seeds, 1)?;
    println!("\nradius-1 subgraph around copenhagen:");
    for triple in subgraph.triples() {
        println!("  {triple}");
    }
    Ok(())
}

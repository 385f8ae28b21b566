//! Exhaustive path enumeration with the brute-force oracle: every simple
//! path of an exact depth, optionally filtered by terminal type. This is the
//! ground truth that pruned exploration is measured against.
//!
//! ```bash
//! cargo run -p kgqa --example oracle_paths
//! ```

use std::path::PathBuf;

use kgqa::kg::load_graph;
use kgqa::metrics::{brute_force_paths, OracleConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo")
        .join(name)
}

fn main() -> kgqa::Result<()> {
    let graph = load_graph(&fixture("graph.tsv"), Some(&fixture("meta.tsv")))?;
    let oracle_cfg = OracleConfig::default();

    println!("chain cluster, depth 2 from ch_a:");
    for path in brute_force_paths(&graph, &["ch_a".to_string()], 2, |_| true, &oracle_cfg)? {
        println!("  {}", render(&path));
    }

    println!("\nbinary tree, depth 3 from bt (expect 8 leaf paths):");
    let tree_paths = brute_force_paths(&graph, &["bt".to_string()], 3, |_| true, &oracle_cfg)?;
    for path in &tree_paths {
        println!("  {}", render(path));
    }
    println!("  -> {} paths", tree_paths.len());

    println!("\ndepth 2 from the tour entity, terminals restricted to colleges:");
    let college = brute_force_paths(
        &graph,
        &["country_nation_world_tour".to_string()],
        2,
        |entity| entity.fine_types.contains("organization/education/college"),
        &oracle_cfg,
    )?;
    for path in &college {
        println!("  {}", render(path));
    }
    Ok(())
}

fn render(path: &[kgqa::kg::Triple]) -> String {
    path.iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join("  ")
}

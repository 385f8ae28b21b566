#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kgqa::cli::{MatcherSelector, PlannerSelector, RunConfig};
use kgqa::kg::{Direction, KnowledgeGraph, Triple};
use kgqa::matching::TableMatcher;
use kgqa::plan::{generate_instructions, Plan, ScriptedPlanner, SimulatedAnswer, SubQuestion};

pub const Q_TOUR_COLLEGE: &str =
    "Where did the 'Country Nation World Tour' concert artist go to college?";
pub const Q_COPENHAGEN: &str = "Copenhagen is the capital of which German neighboring country?";
pub const Q_SCIENTIST: &str =
    "Which scientist was honored by both the Royal Society and the Astronomy Guild?";
pub const Q_STADIUM: &str = "At which stadium do the city football clubs play their home games?";
pub const Q_INSTRUMENT: &str = "Which instrument does the lead singer of Glass Harbor play?";
pub const Q_LIGHTHOUSE: &str = "Who kept the Old Port Lighthouse?";
pub const Q_COMET: &str = "Which comet did the director of Hillcrest Observatory discover?";
pub const Q_HONEY_CAKE: &str =
    "What is the main ingredient of the honey cake from grandma's cookbook?";
pub const Q_RAILWAY: &str = "Where is the operator of the Coastal Express headquartered?";
pub const Q_ORCHARD: &str = "What does Valley Orchard grow?";
pub const Q_FILMS: &str = "Which films did Dara Rivera direct after 2010?";
pub const Q_MIST_VALLEY: &str = "How deep is the lake hidden in Mist Valley?";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/demo")
        .join(name)
}

pub fn demo_config() -> RunConfig {
    let mut config = RunConfig::new(
        fixture("graph.tsv"),
        PlannerSelector::Scripted(fixture("planner.json")),
        MatcherSelector::Table(fixture("matcher.json")),
    );
    config.meta_path = Some(fixture("meta.tsv"));
    config
}

pub fn demo_graph() -> KnowledgeGraph {
    kgqa::kg::load_graph(&fixture("graph.tsv"), Some(&fixture("meta.tsv"))).unwrap()
}

pub fn demo_planner() -> ScriptedPlanner {
    ScriptedPlanner::from_path(&fixture("planner.json")).unwrap()
}

pub fn demo_matcher() -> TableMatcher {
    TableMatcher::from_path(&fixture("matcher.json")).unwrap()
}

/// Random multigraph with entity ids `e000..`; seeds `e000`/`e001` always
/// exist.
pub fn random_graph(seed: u64, entities: usize, triples: usize, relations: usize) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..entities).map(|i| format!("e{i:03}")).collect();
    let mut edges = Vec::with_capacity(triples);
    for _ in 0..triples {
        edges.push(Triple::new(
            ids[rng.gen_range(0..ids.len())].clone(),
            format!("r{}", rng.gen_range(0..relations)),
            ids[rng.gen_range(0..ids.len())].clone(),
        ));
    }
    let entities = ids.into_iter().map(kgqa::kg::Entity::bare);
    KnowledgeGraph::from_parts(entities, edges).unwrap()
}

/// Plan with one forward-search instruction per hop and permissive answers,
/// for matcher-driven exploration tests.
pub fn synthetic_plan(seeds: &[&str], depth: usize) -> Plan {
    let sub_questions: Vec<SubQuestion> = (1..=depth)
        .map(|i| SubQuestion {
            index: i,
            text: format!("hop {i}"),
        })
        .collect();
    let answers: BTreeMap<usize, SimulatedAnswer> = (1..=depth)
        .map(|i| {
            (
                i,
                SimulatedAnswer {
                    text: format!("answer {i}"),
                    expected_types: BTreeSet::from(["other".to_string()]),
                },
            )
        })
        .collect();
    generate_instructions(
        seeds.iter().map(|s| s.to_string()).collect(),
        sub_questions,
        vec![],
        answers,
    )
    .unwrap()
}

/// Independent recursive enumerator of simple outgoing paths of exact depth,
/// structurally different from the library's iterative oracle.
pub fn recursive_paths(
    g: &KnowledgeGraph,
    seeds: &[String],
    depth: usize,
) -> BTreeSet<Vec<Triple>> {
    fn go(
        g: &KnowledgeGraph,
        current: &str,
        depth: usize,
        path: &mut Vec<Triple>,
        visited: &mut BTreeSet<String>,
        out: &mut BTreeSet<Vec<Triple>>,
    ) {
        if path.len() == depth {
            out.insert(path.clone());
            return;
        }
        let adjacency = g.neighbors(current, Direction::Outgoing).unwrap().clone();
        for (relation, tails) in adjacency {
            for tail in tails {
                if visited.contains(&tail) {
                    continue;
                }
                visited.insert(tail.clone());
                path.push(Triple::new(current, relation.clone(), tail.clone()));
                go(g, &tail, depth, path, visited, out);
                path.pop();
                visited.remove(&tail);
            }
        }
    }
    let mut out = BTreeSet::new();
    let unique: BTreeSet<&String> = seeds.iter().collect();
    for seed in unique {
        let mut path = Vec::new();
        let mut visited = BTreeSet::from([seed.clone()]);
        go(g, seed, depth, &mut path, &mut visited, &mut out);
    }
    out
}

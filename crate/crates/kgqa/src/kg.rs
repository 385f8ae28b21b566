//! In-memory knowledge graph: load, index, and serve an immutable typed
//! multigraph with entity metadata.
//!
//! The on-disk formats are deliberately plain:
//!
//! - triples file: UTF-8, LF line endings, one triple per line, exactly three
//!   tab-separated fields `head \t relation \t tail`;
//! - metadata file: four tab-separated fields
//!   `id \t label \t comma-separated-fine-types \t description` (description
//!   may be empty, but the separator must be present).
//!
//! Graphs are immutable after load and safe to share across threads.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type EntityId = String;

/// Relation-keyed adjacency for one entity: relation label -> set of entity ids.
pub type Adjacency = BTreeMap<String, BTreeSet<EntityId>>;

static EMPTY_ADJACENCY: Adjacency = Adjacency::new();

/// A graph node with its surface form, free-text description, and
/// fine-grained type labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub label: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub fine_types: BTreeSet<String>,
}

impl Entity {
    /// Entity known only from a triple: label defaults to the id, no
    /// description, no types.
    pub fn bare(id: impl Into<EntityId>) -> Self {
        let id = id.into();
        Entity {
            label: id.clone(),
            id,
            description: String::new(),
            fine_types: BTreeSet::new(),
        }
    }
}

/// One directed edge `head -[relation]-> tail`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: String,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(
        head: impl Into<EntityId>,
        relation: impl Into<String>,
        tail: impl Into<EntityId>,
    ) -> Self {
        Triple {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -[{}]-> {}", self.head, self.relation, self.tail)
    }
}

/// Traversal direction for adjacency lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// Immutable, fully indexed knowledge graph.
///
/// `out_index` and `in_index` are exact inverses of each other; every stored
/// triple appears in both exactly once. Triples identical in
/// (head, relation, tail) are deduplicated at construction: traversal
/// semantics are set-based and duplicates would only inflate cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entities: BTreeMap<EntityId, Entity>,
    triples: Vec<Triple>,
    out_index: BTreeMap<EntityId, Adjacency>,
    in_index: BTreeMap<EntityId, Adjacency>,
}

impl KnowledgeGraph {
    pub fn empty() -> Self {
        KnowledgeGraph {
            entities: BTreeMap::new(),
            triples: Vec::new(),
            out_index: BTreeMap::new(),
            in_index: BTreeMap::new(),
        }
    }

    /// Build a graph from explicit parts. Entities mentioned only in triples
    /// are created bare; duplicate entity ids in `entities` are rejected.
    pub fn from_parts(
        entities: impl IntoIterator<Item = Entity>,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Result<Self> {
        let mut entity_map: BTreeMap<EntityId, Entity> = BTreeMap::new();
        for entity in entities {
            check_field(&entity.id, "entity id")?;
            check_field_allow_empty(&entity.label, "entity label")?;
            check_field_allow_empty(&entity.description, "entity description")?;
            for t in &entity.fine_types {
                check_field(t, "fine type label")?;
            }
            if entity_map.insert(entity.id.clone(), entity.clone()).is_some() {
                return Err(Error::DuplicateMeta(entity.id));
            }
        }

        let mut unique: BTreeSet<Triple> = BTreeSet::new();
        for triple in triples {
            check_field(&triple.head, "triple head")?;
            check_field(&triple.relation, "triple relation")?;
            check_field(&triple.tail, "triple tail")?;
            unique.insert(triple);
        }

        for triple in &unique {
            for id in [&triple.head, &triple.tail] {
                entity_map
                    .entry(id.clone())
                    .or_insert_with(|| Entity::bare(id.clone()));
            }
        }

        let mut out_index: BTreeMap<EntityId, Adjacency> = BTreeMap::new();
        let mut in_index: BTreeMap<EntityId, Adjacency> = BTreeMap::new();
        for triple in &unique {
            out_index
                .entry(triple.head.clone())
                .or_default()
                .entry(triple.relation.clone())
                .or_default()
                .insert(triple.tail.clone());
            in_index
                .entry(triple.tail.clone())
                .or_default()
                .entry(triple.relation.clone())
                .or_default()
                .insert(triple.head.clone());
        }

        Ok(KnowledgeGraph {
            entities: entity_map,
            triples: unique.into_iter().collect(),
            out_index,
            in_index,
        })
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn require_entity(&self, id: &str) -> Result<&Entity> {
        self.entities
            .get(id)
            .ok_or_else(|| Error::EntityNotFound(id.to_string()))
    }

    pub fn contains_entity(&self, id: &str) -> bool {
        self.entities.contains_key(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    /// Exact adjacency of `id` in the given direction; empty map if the
    /// entity is isolated on that side.
    pub fn neighbors(&self, id: &str, direction: Direction) -> Result<&Adjacency> {
        self.require_entity(id)?;
        let index = match direction {
            Direction::Outgoing => &self.out_index,
            Direction::Incoming => &self.in_index,
        };
        Ok(index.get(id).unwrap_or(&EMPTY_ADJACENCY))
    }

    /// Number of outgoing (relation, tail) pairs; the degree used when
    /// picking representative tails.
    pub fn out_degree(&self, id: &str) -> usize {
        self.out_index
            .get(id)
            .map(|adj| adj.values().map(BTreeSet::len).sum())
            .unwrap_or(0)
    }

    /// Induced subgraph of every entity within `radius` undirected hops of
    /// any seed, with all triples among the included entities. Metadata is
    /// copied verbatim.
    pub fn extract_subgraph(&self, seeds: &BTreeSet<EntityId>, radius: usize) -> Result<Self> {
        for seed in seeds {
            self.require_entity(seed)?;
        }
        let mut included: BTreeSet<EntityId> = BTreeSet::new();
        let mut queue: VecDeque<(EntityId, usize)> = VecDeque::new();
        for seed in seeds {
            included.insert(seed.clone());
            queue.push_back((seed.clone(), 0));
        }
        while let Some((id, dist)) = queue.pop_front() {
            if dist == radius {
                continue;
            }
            for direction in [Direction::Outgoing, Direction::Incoming] {
                let index = match direction {
                    Direction::Outgoing => &self.out_index,
                    Direction::Incoming => &self.in_index,
                };
                if let Some(adj) = index.get(&id) {
                    for targets in adj.values() {
                        for next in targets {
                            if included.insert(next.clone()) {
                                queue.push_back((next.clone(), dist + 1));
                            }
                        }
                    }
                }
            }
        }
        let entities = included
            .iter()
            .map(|id| self.entities[id].clone())
            .collect::<Vec<_>>();
        let triples = self
            .triples
            .iter()
            .filter(|t| included.contains(&t.head) && included.contains(&t.tail))
            .cloned()
            .collect::<Vec<_>>();
        Self::from_parts(entities, triples)
    }

    /// Render the triples file content (canonical order).
    pub fn to_triples_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.head);
            out.push('\t');
            out.push_str(&t.relation);
            out.push('\t');
            out.push_str(&t.tail);
            out.push('\n');
        }
        out
    }

    /// Render the metadata file content (canonical order, one row per entity).
    pub fn to_metadata_tsv(&self) -> String {
        let mut out = String::new();
        for e in self.entities.values() {
            let types = e.fine_types.iter().cloned().collect::<Vec<_>>().join(",");
            out.push_str(&e.id);
            out.push('\t');
            out.push_str(&e.label);
            out.push('\t');
            out.push_str(&types);
            out.push('\t');
            out.push_str(&e.description);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, triples_path: &Path, meta_path: &Path) -> Result<()> {
        fs::write(triples_path, self.to_triples_tsv())
            .map_err(|e| Error::io(triples_path, e))?;
        fs::write(meta_path, self.to_metadata_tsv()).map_err(|e| Error::io(meta_path, e))?;
        Ok(())
    }
}

/// Load a graph from a triples file and an optional metadata file.
///
/// Entities mentioned only in triples get an empty description and empty
/// type set; metadata rows for entities absent from the triples are accepted
/// as isolated nodes.
pub fn load_graph(triples_path: &Path, meta_path: Option<&Path>) -> Result<KnowledgeGraph> {
    let content =
        fs::read_to_string(triples_path).map_err(|e| Error::io(triples_path, e))?;
    let mut triples = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                triples_path,
                i + 1,
                format!("expected 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        let triple = Triple::new(fields[0], fields[1], fields[2]);
        for (f, name) in [
            (&triple.head, "head"),
            (&triple.relation, "relation"),
            (&triple.tail, "tail"),
        ] {
            check_field(f, name)
                .map_err(|e| Error::parse(triples_path, i + 1, e.to_string()))?;
        }
        triples.push(triple);
    }

    let mut entities = Vec::new();
    if let Some(meta_path) = meta_path {
        let content =
            fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
        let mut seen: BTreeSet<EntityId> = BTreeSet::new();
        for (i, line) in content.lines().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    meta_path,
                    i + 1,
                    format!("expected 4 tab-separated fields, got {}", fields.len()),
                ));
            }
            let id = fields[0].to_string();
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateMeta(id));
            }
            let fine_types = fields[2]
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect::<BTreeSet<_>>();
            let entity = Entity {
                id,
                label: fields[1].to_string(),
                description: fields[3].to_string(),
                fine_types,
            };
            check_field(&entity.id, "entity id")
                .map_err(|e| Error::parse(meta_path, i + 1, e.to_string()))?;
            entities.push(entity);
        }
    }

    KnowledgeGraph::from_parts(entities, triples)
}

fn check_field(value: &str, name: &str) -> Result<()> {
    if value.is_empty() {
        return Err(Error::Config(format!("{name} must be non-empty")));
    }
    check_field_allow_empty(value, name)
}

fn check_field_allow_empty(value: &str, name: &str) -> Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::Config(format!(
            "{name} must not contain tab, line feed, or carriage return"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct GraphDocRef<'a> {
    entities: Vec<&'a Entity>,
    triples: &'a [Triple],
}

#[derive(Deserialize)]
struct GraphDocOwned {
    entities: Vec<Entity>,
    triples: Vec<Triple>,
}

impl Serialize for KnowledgeGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GraphDocRef {
            entities: self.entities.values().collect(),
            triples: &self.triples,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KnowledgeGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = GraphDocOwned::deserialize(deserializer)?;
        KnowledgeGraph::from_parts(doc.entities, doc.triples).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_triple_construction() {
        let f = write_temp("A\tperformer\tB\n");
        let g = load_graph(f.path(), None).unwrap();
        assert_eq!(g.entity_count(), 2);
        assert_eq!(g.triple_count(), 1);
        let adj = g.neighbors("A", Direction::Outgoing).unwrap();
        assert_eq!(
            adj.get("performer").unwrap(),
            &BTreeSet::from(["B".to_string()])
        );
    }

    #[test]
    fn empty_triples_file() {
        let f = write_temp("");
        let g = load_graph(f.path(), None).unwrap();
        assert_eq!(g.entity_count(), 0);
        assert_eq!(g.triple_count(), 0);
    }

    #[test]
    fn metadata_round_trip_on_chain() {
        let triples = write_temp("A\tr\tB\nB\tr\tC\nC\tr\tD\n");
        let meta = write_temp("B\tNode B\tperson\tA person in the middle.\n");
        let g = load_graph(triples.path(), Some(meta.path())).unwrap();
        let b = g.entity("B").unwrap();
        assert_eq!(b.fine_types, BTreeSet::from(["person".to_string()]));
        assert_eq!(b.label, "Node B");
        // entities absent from meta fall back to bare defaults
        let a = g.entity("A").unwrap();
        assert_eq!(a.label, "A");
        assert!(a.fine_types.is_empty());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_temp("A\tr\tB\nA\tno-tail\n");
        let err = load_graph(f.path(), None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn duplicate_meta_id_is_fatal() {
        let triples = write_temp("A\tr\tB\n");
        let meta = write_temp("A\tA\t\t\nA\tA again\t\t\n");
        let err = load_graph(triples.path(), Some(meta.path())).unwrap_err();
        assert!(matches!(err, Error::DuplicateMeta(id) if id == "A"));
    }

    #[test]
    fn dangling_meta_entity_becomes_isolated_node() {
        let triples = write_temp("A\tr\tB\n");
        let meta = write_temp("Z\tLonely\tother\tNot mentioned in triples.\n");
        let g = load_graph(triples.path(), Some(meta.path())).unwrap();
        assert_eq!(g.entity_count(), 3);
        assert!(g
            .neighbors("Z", Direction::Outgoing)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn duplicate_triples_are_deduplicated() {
        let f = write_temp("A\tr\tB\nA\tr\tB\nA\tr\tB\n");
        let g = load_graph(f.path(), None).unwrap();
        assert_eq!(g.triple_count(), 1);
    }

    #[test]
    fn neighbors_incoming_uses_inverse_index() {
        let g = KnowledgeGraph::from_parts(
            [],
            [Triple::new("A", "r1", "B"), Triple::new("A", "r1", "C")],
        )
        .unwrap();
        let adj = g.neighbors("B", Direction::Incoming).unwrap();
        assert_eq!(adj.get("r1").unwrap(), &BTreeSet::from(["A".to_string()]));
        let out = g.neighbors("A", Direction::Outgoing).unwrap();
        assert_eq!(
            out.get("r1").unwrap(),
            &BTreeSet::from(["B".to_string(), "C".to_string()])
        );
    }

    #[test]
    fn neighbors_unknown_entity_errors() {
        let g = KnowledgeGraph::from_parts([], [Triple::new("A", "r", "B")]).unwrap();
        assert!(matches!(
            g.neighbors("missing", Direction::Outgoing),
            Err(Error::EntityNotFound(_))
        ));
    }

    fn random_graph(seed: u64, entities: usize, triples: usize) -> KnowledgeGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<String> = (0..entities).map(|i| format!("e{i:03}")).collect();
        let rels = ["r0", "r1", "r2"];
        let mut ts = Vec::new();
        for _ in 0..triples {
            let h = ids[rng.gen_range(0..ids.len())].clone();
            let t = ids[rng.gen_range(0..ids.len())].clone();
            let r = rels[rng.gen_range(0..rels.len())].to_string();
            ts.push(Triple { head: h, relation: r, tail: t });
        }
        KnowledgeGraph::from_parts([], ts).unwrap()
    }

    #[test]
    fn neighbors_agree_with_triple_scan_on_random_graph() {
        let g = random_graph(7, 30, 100);
        for e in g.entities() {
            let adj = g.neighbors(&e.id, Direction::Outgoing).unwrap();
            let from_index: BTreeSet<(String, String)> = adj
                .iter()
                .flat_map(|(r, ts)| ts.iter().map(move |t| (r.clone(), t.clone())))
                .collect();
            let from_scan: BTreeSet<(String, String)> = g
                .triples()
                .iter()
                .filter(|t| t.head == e.id)
                .map(|t| (t.relation.clone(), t.tail.clone()))
                .collect();
            assert_eq!(from_index, from_scan, "mismatch at {}", e.id);
        }
    }

    #[test]
    fn subgraph_radius_zero_keeps_seed_edges_only() {
        let g = KnowledgeGraph::from_parts(
            [],
            [
                Triple::new("A", "r", "B"),
                Triple::new("A", "r", "A2"),
                Triple::new("A", "self", "A"),
            ],
        )
        .unwrap();
        let sub = g
            .extract_subgraph(&BTreeSet::from(["A".to_string()]), 0)
            .unwrap();
        assert_eq!(sub.entity_count(), 1);
        // seed-to-seed edges survive radius zero
        assert_eq!(sub.triples(), &[Triple::new("A", "self", "A")]);
    }

    #[test]
    fn subgraph_one_hop_chain() {
        let g = KnowledgeGraph::from_parts(
            [],
            [Triple::new("A", "r", "B"), Triple::new("B", "r", "C")],
        )
        .unwrap();
        let sub = g
            .extract_subgraph(&BTreeSet::from(["A".to_string()]), 1)
            .unwrap();
        let ids: Vec<&str> = sub.entities().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, vec!["A", "B"]);
        assert_eq!(sub.triples(), &[Triple::new("A", "r", "B")]);
    }

    #[test]
    fn subgraph_unknown_seed_errors() {
        let g = KnowledgeGraph::from_parts([], [Triple::new("A", "r", "B")]).unwrap();
        assert!(matches!(
            g.extract_subgraph(&BTreeSet::from(["nope".to_string()]), 1),
            Err(Error::EntityNotFound(_))
        ));
    }

    /// Independent BFS over an undirected edge list, used as the oracle for
    /// `extract_subgraph`.
    fn bfs_oracle(g: &KnowledgeGraph, seeds: &BTreeSet<String>, radius: usize) -> BTreeSet<String> {
        let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for t in g.triples() {
            edges.entry(t.head.clone()).or_default().insert(t.tail.clone());
            edges.entry(t.tail.clone()).or_default().insert(t.head.clone());
        }
        let mut seen: BTreeSet<String> = seeds.clone();
        let mut frontier: BTreeSet<String> = seeds.clone();
        for _ in 0..radius {
            let mut next = BTreeSet::new();
            for e in &frontier {
                if let Some(ns) = edges.get(e) {
                    for n in ns {
                        if seen.insert(n.clone()) {
                            next.insert(n.clone());
                        }
                    }
                }
            }
            frontier = next;
        }
        seen
    }

    #[test]
    fn subgraph_matches_bfs_oracle_on_random_graph() {
        let g = random_graph(11, 50, 120);
        let seeds = BTreeSet::from(["e000".to_string(), "e017".to_string()]);
        for radius in 0..4 {
            let sub = g.extract_subgraph(&seeds, radius).unwrap();
            let got: BTreeSet<String> = sub.entities().map(|e| e.id.clone()).collect();
            assert_eq!(got, bfs_oracle(&g, &seeds, radius), "radius {radius}");
        }
    }

    #[test]
    fn save_load_round_trip() {
        let g = random_graph(3, 20, 60);
        let dir = tempfile::tempdir().unwrap();
        let tp = dir.path().join("g.tsv");
        let mp = dir.path().join("m.tsv");
        g.save(&tp, &mp).unwrap();
        let g2 = load_graph(&tp, Some(&mp)).unwrap();
        assert_eq!(g, g2);
    }

    proptest! {
        #[test]
        fn indices_are_exact_inverses(edges in proptest::collection::vec((0u8..12, 0u8..3, 0u8..12), 0..40)) {
            let triples: Vec<Triple> = edges
                .into_iter()
                .map(|(h, r, t)| Triple::new(format!("n{h}"), format!("r{r}"), format!("n{t}")))
                .collect();
            let g = KnowledgeGraph::from_parts([], triples).unwrap();
            for t in g.triples() {
                let out = g.neighbors(&t.head, Direction::Outgoing).unwrap();
                prop_assert!(out.get(&t.relation).unwrap().contains(&t.tail));
                let inc = g.neighbors(&t.tail, Direction::Incoming).unwrap();
                prop_assert!(inc.get(&t.relation).unwrap().contains(&t.head));
            }
        }

        #[test]
        fn subgraph_monotone_in_radius(edges in proptest::collection::vec((0u8..10, 0u8..2, 0u8..10), 1..30), radius in 0usize..3) {
            let triples: Vec<Triple> = edges
                .into_iter()
                .map(|(h, r, t)| Triple::new(format!("n{h}"), format!("r{r}"), format!("n{t}")))
                .collect();
            let g = KnowledgeGraph::from_parts([], triples).unwrap();
            let seed = g.entities().next().unwrap().id.clone();
            let seeds = BTreeSet::from([seed]);
            let small = g.extract_subgraph(&seeds, radius).unwrap();
            let large = g.extract_subgraph(&seeds, radius + 1).unwrap();
            let small_ids: BTreeSet<_> = small.entities().map(|e| e.id.clone()).collect();
            let large_ids: BTreeSet<_> = large.entities().map(|e| e.id.clone()).collect();
            prop_assert!(small_ids.is_subset(&large_ids));
            let small_ts: BTreeSet<_> = small.triples().iter().cloned().collect();
            let large_ts: BTreeSet<_> = large.triples().iter().cloned().collect();
            prop_assert!(small_ts.is_subset(&large_ts));
        }

        #[test]
        fn tsv_round_trip_preserves_graph(edges in proptest::collection::vec((0u8..10, 0u8..3, 0u8..10), 0..30)) {
            let triples: Vec<Triple> = edges
                .into_iter()
                .map(|(h, r, t)| Triple::new(format!("n{h}"), format!("r{r}"), format!("n{t}")))
                .collect();
            let g = KnowledgeGraph::from_parts([], triples).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let tp = dir.path().join("g.tsv");
            let mp = dir.path().join("m.tsv");
            g.save(&tp, &mp).unwrap();
            let g2 = load_graph(&tp, Some(&mp)).unwrap();
            prop_assert_eq!(g, g2);
        }
    }
}

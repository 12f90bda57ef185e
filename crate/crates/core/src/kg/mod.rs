//! In-memory knowledge graph: interned triples, vertex-kind classification,
//! local and generalized local knowledge graphs, hop distances and
//! basic-graph-pattern matching.

mod generalize;
mod load;
mod pattern;
mod subdivision;

use std::collections::HashMap;
use std::fmt;

pub use generalize::{Anchor, Context, GeneralizedLocalKg, GeneralizedTriple, LocalKg};
pub use load::{load_kg, read_tsv_rows, KgOptions, DEFAULT_THING_LABEL, DEFAULT_TYPE_LABEL};
pub use pattern::{match_patterns, Bindings, Term, TriplePattern, Value};
pub use subdivision::SubdivisionGraph;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A vertex or an edge label: the two kinds of object that own local
/// knowledge graphs and embedding vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectId {
    Vertex(VertexId),
    Edge(EdgeId),
}

impl From<VertexId> for ObjectId {
    fn from(v: VertexId) -> Self {
        ObjectId::Vertex(v)
    }
}

impl From<EdgeId> for ObjectId {
    fn from(e: EdgeId) -> Self {
        ObjectId::Edge(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: VertexId,
    pub edge: EdgeId,
    pub tail: VertexId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Entity,
    Class,
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexKind::Entity => f.write_str("entity"),
            VertexKind::Class => f.write_str("class"),
        }
    }
}

/// Immutable triple set with label interning and adjacency indexes.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    vertex_labels: Vec<String>,
    vertex_index: HashMap<String, VertexId>,
    edge_labels: Vec<String>,
    edge_index: HashMap<String, EdgeId>,
    triples: Vec<Triple>,
    kinds: Vec<VertexKind>,
    /// Classes of each entity vertex (sorted, never empty). Empty for classes.
    classes: Vec<Vec<VertexId>>,
    /// Instances of each class vertex (sorted). Empty for entities.
    instances: Vec<Vec<VertexId>>,
    /// What each vertex generalizes to: itself for classes, its classes otherwise.
    generalized: Vec<Vec<VertexId>>,
    by_head: Vec<Vec<u32>>,
    by_tail: Vec<Vec<u32>>,
    by_edge: Vec<Vec<u32>>,
    type_edge: EdgeId,
    thing: VertexId,
}

impl KnowledgeGraph {
    /// Builds a graph from labelled triples. Duplicate triples collapse.
    pub fn from_triples<'a, I>(triples: I, options: &KgOptions) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut vertex_labels = Vec::new();
        let mut vertex_index = HashMap::new();
        let mut edge_labels = Vec::new();
        let mut edge_index = HashMap::new();

        let mut intern_vertex = |label: &str| -> VertexId {
            if let Some(&id) = vertex_index.get(label) {
                return id;
            }
            let id = VertexId(vertex_labels.len() as u32);
            vertex_labels.push(label.to_string());
            vertex_index.insert(label.to_string(), id);
            id
        };
        let mut intern_edge = |label: &str| -> EdgeId {
            if let Some(&id) = edge_index.get(label) {
                return id;
            }
            let id = EdgeId(edge_labels.len() as u32);
            edge_labels.push(label.to_string());
            edge_index.insert(label.to_string(), id);
            id
        };

        let mut out = Vec::new();
        for (h, e, t) in triples {
            let head = intern_vertex(h);
            let edge = intern_edge(e);
            let tail = intern_vertex(t);
            out.push(Triple { head, edge, tail });
        }
        if out.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let type_edge = intern_edge(&options.type_label);
        let thing = intern_vertex(&options.thing_label);

        out.sort();
        out.dedup();

        let nv = vertex_labels.len();
        let ne = edge_labels.len();
        let mut by_head = vec![Vec::new(); nv];
        let mut by_tail = vec![Vec::new(); nv];
        let mut by_edge = vec![Vec::new(); ne];
        for (i, t) in out.iter().enumerate() {
            by_head[t.head.index()].push(i as u32);
            by_tail[t.tail.index()].push(i as u32);
            by_edge[t.edge.index()].push(i as u32);
        }

        let mut kinds = vec![VertexKind::Entity; nv];
        kinds[thing.index()] = VertexKind::Class;
        for t in out.iter().filter(|t| t.edge == type_edge) {
            kinds[t.tail.index()] = VertexKind::Class;
        }

        let mut classes = vec![Vec::new(); nv];
        let mut instances = vec![Vec::new(); nv];
        for t in out.iter().filter(|t| t.edge == type_edge) {
            if kinds[t.head.index()] == VertexKind::Entity {
                classes[t.head.index()].push(t.tail);
            }
        }
        for v in 0..nv {
            if kinds[v] != VertexKind::Entity {
                continue;
            }
            if classes[v].is_empty() {
                classes[v].push(thing);
            }
            classes[v].sort();
            classes[v].dedup();
            for &c in &classes[v] {
                instances[c.index()].push(VertexId(v as u32));
            }
        }

        let generalized = (0..nv)
            .map(|v| match kinds[v] {
                VertexKind::Class => vec![VertexId(v as u32)],
                VertexKind::Entity => classes[v].clone(),
            })
            .collect();

        Ok(Self {
            vertex_labels,
            vertex_index,
            edge_labels,
            edge_index,
            triples: out,
            kinds,
            classes,
            instances,
            generalized,
            by_head,
            by_tail,
            by_edge,
            type_edge,
            thing,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_labels.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_labels.len() as u32).map(VertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edge_labels.len() as u32).map(EdgeId)
    }

    /// All vertices followed by all edges.
    pub fn objects(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.vertices()
            .map(ObjectId::Vertex)
            .chain(self.edges().map(ObjectId::Edge))
    }

    pub fn vertex(&self, label: &str) -> Option<VertexId> {
        self.vertex_index.get(label).copied()
    }

    pub fn edge(&self, label: &str) -> Option<EdgeId> {
        self.edge_index.get(label).copied()
    }

    pub fn vertex_label(&self, v: VertexId) -> &str {
        &self.vertex_labels[v.index()]
    }

    pub fn edge_label(&self, e: EdgeId) -> &str {
        &self.edge_labels[e.index()]
    }

    pub fn label(&self, id: ObjectId) -> &str {
        match id {
            ObjectId::Vertex(v) => self.vertex_label(v),
            ObjectId::Edge(e) => self.edge_label(e),
        }
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        match id {
            ObjectId::Vertex(v) => v.index() < self.vertex_count(),
            ObjectId::Edge(e) => e.index() < self.edge_count(),
        }
    }

    pub(crate) fn check(&self, id: ObjectId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownObject(id))
        }
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        self.kinds[v.index()]
    }

    pub fn is_class(&self, v: VertexId) -> bool {
        self.kind(v) == VertexKind::Class
    }

    /// Declared classes of an entity (`Thing` when none is declared).
    /// Empty for class vertices.
    pub fn classes_of(&self, v: VertexId) -> &[VertexId] {
        &self.classes[v.index()]
    }

    pub fn instances_of(&self, c: VertexId) -> &[VertexId] {
        &self.instances[c.index()]
    }

    pub fn type_edge(&self) -> EdgeId {
        self.type_edge
    }

    pub fn thing(&self) -> VertexId {
        self.thing
    }

    pub fn class_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_class(v))
    }

    pub fn triples_with_head(&self, v: VertexId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_head[v.index()]
            .iter()
            .map(|&i| &self.triples[i as usize])
    }

    pub fn triples_with_tail(&self, v: VertexId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_tail[v.index()]
            .iter()
            .map(|&i| &self.triples[i as usize])
    }

    pub fn triples_with_edge(&self, e: EdgeId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_edge[e.index()]
            .iter()
            .map(|&i| &self.triples[i as usize])
    }

    pub(crate) fn head_index(&self, v: VertexId) -> &[u32] {
        &self.by_head[v.index()]
    }

    pub(crate) fn tail_index(&self, v: VertexId) -> &[u32] {
        &self.by_tail[v.index()]
    }

    pub(crate) fn edge_index_of(&self, e: EdgeId) -> &[u32] {
        &self.by_edge[e.index()]
    }

    pub fn has_triple(&self, t: &Triple) -> bool {
        self.triples.binary_search(t).is_ok()
    }

    /// The classes a neighbour generalizes to: itself when it already is a
    /// class, otherwise its declared classes.
    pub(crate) fn generalized(&self, v: VertexId) -> &[VertexId] {
        &self.generalized[v.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kg(triples: &[(&str, &str, &str)]) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(triples.iter().copied(), &KgOptions::default()).unwrap()
    }

    #[test]
    fn single_type_triple_classifies() {
        let g = kg(&[("a", "type", "C")]);
        assert_eq!(g.kind(g.vertex("C").unwrap()), VertexKind::Class);
        assert_eq!(g.kind(g.vertex("a").unwrap()), VertexKind::Entity);
        assert_eq!(g.classes_of(g.vertex("a").unwrap()), &[g.vertex("C").unwrap()]);
    }

    #[test]
    fn classless_entities_fall_back_to_thing() {
        let g = kg(&[("a", "knows", "b")]);
        let thing = g.thing();
        assert_eq!(g.label(thing.into()), "Thing");
        assert!(g.is_class(thing));
        for l in ["a", "b"] {
            assert_eq!(g.classes_of(g.vertex(l).unwrap()), &[thing]);
        }
        assert_eq!(g.instances_of(thing).len(), 2);
        // The type edge is registered even when unused.
        assert_eq!(g.edge_label(g.type_edge()), "type");
    }

    #[test]
    fn duplicate_triples_collapse() {
        let g = kg(&[("a", "r", "b"), ("a", "r", "b")]);
        assert_eq!(g.triples().len(), 1);
    }

    #[test]
    fn adjacency_agrees_with_triples() {
        let g = kg(&[("a", "r", "b"), ("b", "r", "c"), ("a", "s", "c"), ("a", "type", "C")]);
        for v in g.vertices() {
            for t in g.triples_with_head(v) {
                assert_eq!(t.head, v);
            }
            for t in g.triples_with_tail(v) {
                assert_eq!(t.tail, v);
            }
        }
        let total: usize = g.edges().map(|e| g.triples_with_edge(e).count()).sum();
        assert_eq!(total, g.triples().len());
    }
}

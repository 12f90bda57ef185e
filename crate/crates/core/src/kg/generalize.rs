use std::collections::BTreeMap;

use super::{EdgeId, KnowledgeGraph, ObjectId, Triple, VertexId, VertexKind};
use crate::error::Result;

/// Raw triples incident to a vertex, or carrying an edge label. Type-edge
/// triples are never part of a local knowledge graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalKg {
    pub owner: ObjectId,
    pub triples: Vec<Triple>,
}

impl LocalKg {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Where the owner of a GL-KG sits inside one of its generalized triples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Anchor {
    /// Vertex owner as head: `(owner, e, class)`.
    Head,
    /// Vertex owner as tail: `(class, e, owner)`.
    Tail,
    /// Edge owner: `(v, owner, v')`.
    Edge,
}

impl Anchor {
    pub fn as_str(self) -> &'static str {
        match self {
            Anchor::Head => "H",
            Anchor::Tail => "T",
            Anchor::Edge => "E",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "H" => Some(Anchor::Head),
            "T" => Some(Anchor::Tail),
            "E" => Some(Anchor::Edge),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GeneralizedTriple {
    pub anchor: Anchor,
    pub head: VertexId,
    pub edge: EdgeId,
    pub tail: VertexId,
    /// Number of raw local triples that generalize to this triple.
    pub support: u32,
}

impl GeneralizedTriple {
    /// The part of the triple that does not mention the owner; two GL-KGs
    /// share a triple exactly when they share a context.
    pub fn context(&self) -> Context {
        match self.anchor {
            Anchor::Head => Context::Vertex(Anchor::Head, self.edge, self.tail),
            Anchor::Tail => Context::Vertex(Anchor::Tail, self.edge, self.head),
            Anchor::Edge => Context::Edge(self.head, self.tail),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Context {
    Vertex(Anchor, EdgeId, VertexId),
    Edge(VertexId, VertexId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedLocalKg {
    pub owner: ObjectId,
    /// Sorted by `(anchor, head, edge, tail)`.
    pub triples: Vec<GeneralizedTriple>,
    /// Raw triple count the supports are measured against.
    pub denominator: u32,
}

impl GeneralizedLocalKg {
    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    /// Attention weight `exp(support / denominator)` of one triple.
    pub fn weight(&self, t: &GeneralizedTriple) -> f64 {
        (t.support as f64 / self.denominator as f64).exp()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.triples.iter().map(|t| self.weight(t)).collect()
    }

    pub fn find(&self, head: VertexId, edge: EdgeId, tail: VertexId) -> Option<&GeneralizedTriple> {
        self.triples
            .iter()
            .find(|t| t.head == head && t.edge == edge && t.tail == tail)
    }

    /// Sorted, deduplicated contexts.
    pub fn contexts(&self) -> Vec<Context> {
        let mut c: Vec<Context> = self.triples.iter().map(|t| t.context()).collect();
        c.sort();
        c.dedup();
        c
    }

    fn from_counts(owner: ObjectId, counts: BTreeMap<Key, u32>, denominator: u32) -> Self {
        let triples = counts
            .into_iter()
            .map(|((anchor, head, edge, tail), support)| GeneralizedTriple {
                anchor,
                head,
                edge,
                tail,
                support,
            })
            .collect();
        Self {
            owner,
            triples,
            denominator,
        }
    }
}

type Key = (Anchor, VertexId, EdgeId, VertexId);

impl KnowledgeGraph {
    pub fn local_kg(&self, owner: ObjectId) -> Result<LocalKg> {
        self.check(owner)?;
        let te = self.type_edge();
        let mut idx: Vec<u32> = match owner {
            ObjectId::Vertex(v) => self
                .head_index(v)
                .iter()
                .chain(self.tail_index(v))
                .copied()
                .collect(),
            ObjectId::Edge(e) => self.edge_index_of(e).to_vec(),
        };
        idx.sort_unstable();
        idx.dedup();
        let triples = idx
            .into_iter()
            .map(|i| self.triples()[i as usize])
            .filter(|t| t.edge != te)
            .collect();
        Ok(LocalKg { owner, triples })
    }

    pub fn generalize(&self, owner: ObjectId) -> Result<GeneralizedLocalKg> {
        self.check(owner)?;
        Ok(match owner {
            ObjectId::Vertex(v) => match self.kind(v) {
                VertexKind::Entity => self.generalize_entity(v),
                VertexKind::Class => self.generalize_class(v),
            },
            ObjectId::Edge(e) => self.generalize_edge(e),
        })
    }

    /// GL-KGs of every vertex and edge, in `objects()` order.
    pub fn generalize_all(&self) -> Vec<GeneralizedLocalKg> {
        self.objects()
            .map(|o| self.generalize(o).expect("registered object"))
            .collect()
    }

    fn entity_counts(&self, v: VertexId, counts: &mut BTreeMap<Key, u32>, rename: VertexId) -> u32 {
        let lkg = self.local_kg(ObjectId::Vertex(v)).expect("registered vertex");
        for t in &lkg.triples {
            if t.head == v {
                for &c in self.generalized(t.tail) {
                    *counts.entry((Anchor::Head, rename, t.edge, c)).or_default() += 1;
                }
            }
            if t.tail == v {
                for &c in self.generalized(t.head) {
                    *counts.entry((Anchor::Tail, c, t.edge, rename)).or_default() += 1;
                }
            }
        }
        lkg.len() as u32
    }

    fn generalize_entity(&self, v: VertexId) -> GeneralizedLocalKg {
        let mut counts = BTreeMap::new();
        let denominator = self.entity_counts(v, &mut counts, v);
        GeneralizedLocalKg::from_counts(ObjectId::Vertex(v), counts, denominator)
    }

    /// Image union of the instances' GL-KGs with each instance replaced by
    /// the class; the denominator is the instances' total raw triple count.
    fn generalize_class(&self, c: VertexId) -> GeneralizedLocalKg {
        let mut counts = BTreeMap::new();
        let mut denominator = 0;
        for &inst in self.instances_of(c) {
            denominator += self.entity_counts(inst, &mut counts, c);
        }
        GeneralizedLocalKg::from_counts(ObjectId::Vertex(c), counts, denominator)
    }

    fn generalize_edge(&self, e: EdgeId) -> GeneralizedLocalKg {
        let lkg = self.local_kg(ObjectId::Edge(e)).expect("registered edge");
        let mut counts = BTreeMap::new();
        let mut forms = Vec::new();
        for t in &lkg.triples {
            forms.clear();
            for &ch in self.generalized(t.head) {
                for &ct in self.generalized(t.tail) {
                    forms.push((ch, ct));
                }
            }
            for &ct in self.generalized(t.tail) {
                forms.push((t.head, ct));
            }
            for &ch in self.generalized(t.head) {
                forms.push((ch, t.tail));
            }
            forms.sort_unstable();
            forms.dedup();
            for &(h, tl) in &forms {
                *counts.entry((Anchor::Edge, h, e, tl)).or_default() += 1;
            }
        }
        GeneralizedLocalKg::from_counts(ObjectId::Edge(e), counts, lkg.len() as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KgOptions;

    fn running_example() -> KnowledgeGraph {
        KnowledgeGraph::from_triples(
            [
                ("Batman", "director", "Tim_Burton"),
                ("Batman", "starring", "Michael_Keaton"),
                ("Batman", "type", "Film"),
                ("Michael_Keaton", "type", "Actor"),
                ("Tim_Burton", "type", "Person"),
            ],
            &KgOptions::default(),
        )
        .unwrap()
    }

    fn triple_labels(g: &KnowledgeGraph, gl: &GeneralizedLocalKg) -> Vec<(String, String, String, u32)> {
        gl.triples
            .iter()
            .map(|t| {
                (
                    g.vertex_label(t.head).to_string(),
                    g.edge_label(t.edge).to_string(),
                    g.vertex_label(t.tail).to_string(),
                    t.support,
                )
            })
            .collect()
    }

    fn s(h: &str, e: &str, t: &str, n: u32) -> (String, String, String, u32) {
        (h.into(), e.into(), t.into(), n)
    }

    #[test]
    fn local_kg_of_tim_burton_excludes_type_triple() {
        let g = running_example();
        let tb = g.vertex("Tim_Burton").unwrap();
        let l = g.local_kg(tb.into()).unwrap();
        assert_eq!(
            l.triples,
            vec![Triple {
                head: g.vertex("Batman").unwrap(),
                edge: g.edge("director").unwrap(),
                tail: tb
            }]
        );
    }

    #[test]
    fn local_kg_of_edge() {
        let g = running_example();
        let l = g.local_kg(g.edge("starring").unwrap().into()).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(g.vertex_label(l.triples[0].tail), "Michael_Keaton");
        assert!(g.local_kg(g.edge("type").unwrap().into()).unwrap().is_empty());
    }

    #[test]
    fn isolated_vertex_has_empty_local_kg() {
        let g = running_example();
        assert!(g.local_kg(g.thing().into()).unwrap().is_empty());
    }

    #[test]
    fn unknown_owner_is_rejected() {
        let g = running_example();
        assert!(g.local_kg(ObjectId::Vertex(VertexId(999))).is_err());
        assert!(g.generalize(ObjectId::Edge(EdgeId(999))).is_err());
    }

    #[test]
    fn generalize_tim_burton() {
        let g = running_example();
        let gl = g.generalize(g.vertex("Tim_Burton").unwrap().into()).unwrap();
        assert_eq!(triple_labels(&g, &gl), vec![s("Film", "director", "Tim_Burton", 1)]);
        assert_eq!(gl.denominator, 1);
        assert_eq!(gl.triples[0].anchor, Anchor::Tail);
    }

    #[test]
    fn generalize_director_edge() {
        let g = running_example();
        let gl = g.generalize(g.edge("director").unwrap().into()).unwrap();
        let mut got = triple_labels(&g, &gl);
        got.sort();
        let mut want = vec![
            s("Film", "director", "Person", 1),
            s("Batman", "director", "Person", 1),
            s("Film", "director", "Tim_Burton", 1),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn supports_aggregate() {
        let g = KnowledgeGraph::from_triples(
            [
                ("x", "knows", "a"),
                ("x", "knows", "b"),
                ("a", "type", "P"),
                ("b", "type", "P"),
            ],
            &KgOptions::default(),
        )
        .unwrap();
        let gl = g.generalize(g.vertex("x").unwrap().into()).unwrap();
        assert_eq!(gl.len(), 1);
        assert_eq!(gl.triples[0].support, 2);
        assert_eq!(gl.denominator, 2);
    }

    #[test]
    fn class_glkg_is_image_of_instances() {
        let g = running_example();
        let film = g.vertex("Film").unwrap();
        let gl = g.generalize(film.into()).unwrap();
        let mut got = triple_labels(&g, &gl);
        got.sort();
        assert_eq!(
            got,
            vec![s("Film", "director", "Person", 1), s("Film", "starring", "Actor", 1)]
        );
        assert_eq!(gl.denominator, 2);
    }

    #[test]
    fn multi_class_neighbours_generalize_per_class() {
        let g = KnowledgeGraph::from_triples(
            [("x", "knows", "a"), ("a", "type", "P"), ("a", "type", "Q")],
            &KgOptions::default(),
        )
        .unwrap();
        let gl = g.generalize(g.vertex("x").unwrap().into()).unwrap();
        assert_eq!(gl.len(), 2);
        assert!(gl.triples.iter().all(|t| t.support == 1));
    }
}

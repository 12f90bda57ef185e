use std::collections::VecDeque;

use super::{KnowledgeGraph, ObjectId};
use crate::error::Result;

/// Undirected subdivision graph: every triple `(h, e, t)` becomes the chain
/// `h - τ - t` through its own node `τ`, labelled by `e`. Vertices occupy
/// node indices `0..|V|`, triple nodes follow.
#[derive(Clone, Debug)]
pub struct SubdivisionGraph<'g> {
    kg: &'g KnowledgeGraph,
}

pub const UNREACHED: u32 = u32::MAX;

impl<'g> SubdivisionGraph<'g> {
    pub fn new(kg: &'g KnowledgeGraph) -> Self {
        Self { kg }
    }

    fn node_count(&self) -> usize {
        self.kg.vertex_count() + self.kg.triples().len()
    }

    fn sources(&self, obj: ObjectId) -> Vec<usize> {
        let nv = self.kg.vertex_count();
        match obj {
            ObjectId::Vertex(v) => vec![v.index()],
            ObjectId::Edge(e) => self
                .kg
                .edge_index_of(e)
                .iter()
                .map(|&i| nv + i as usize)
                .collect(),
        }
    }

    /// Breadth-first distances from `obj` to every node, cut off at
    /// `max_hops`. Unreached nodes hold `UNREACHED`.
    pub fn distances_from(&self, obj: ObjectId, max_hops: u32) -> Result<Distances<'g>> {
        self.kg.check(obj)?;
        let nv = self.kg.vertex_count();
        let mut dist = vec![UNREACHED; self.node_count()];
        let mut queue = VecDeque::new();
        for s in self.sources(obj) {
            dist[s] = 0;
            queue.push_back(s);
        }
        while let Some(node) = queue.pop_front() {
            let d = dist[node];
            if d >= max_hops {
                continue;
            }
            let mut visit = |n: usize, queue: &mut VecDeque<usize>| {
                if dist[n] == UNREACHED {
                    dist[n] = d + 1;
                    queue.push_back(n);
                }
            };
            if node < nv {
                let v = super::VertexId(node as u32);
                for &i in self.kg.head_index(v).iter().chain(self.kg.tail_index(v)) {
                    visit(nv + i as usize, &mut queue);
                }
            } else {
                let t = self.kg.triples()[node - nv];
                visit(t.head.index(), &mut queue);
                visit(t.tail.index(), &mut queue);
            }
        }
        Ok(Distances { kg: self.kg, dist })
    }

    /// Shortest distance between two objects, `None` when beyond `max_hops`.
    pub fn hop_distance(&self, a: ObjectId, b: ObjectId, max_hops: u32) -> Result<Option<u32>> {
        self.kg.check(b)?;
        Ok(self.distances_from(a, max_hops)?.to(b))
    }
}

pub struct Distances<'g> {
    kg: &'g KnowledgeGraph,
    dist: Vec<u32>,
}

impl Distances<'_> {
    /// Distance to an object; for an edge, the minimum over its triple nodes.
    pub fn to(&self, obj: ObjectId) -> Option<u32> {
        let nv = self.kg.vertex_count();
        let d = match obj {
            ObjectId::Vertex(v) => self.dist[v.index()],
            ObjectId::Edge(e) => self
                .kg
                .edge_index_of(e)
                .iter()
                .map(|&i| self.dist[nv + i as usize])
                .min()
                .unwrap_or(UNREACHED),
        };
        (d != UNREACHED).then_some(d)
    }
}

impl KnowledgeGraph {
    pub fn hop_distance(&self, a: ObjectId, b: ObjectId, max_hops: u32) -> Result<Option<u32>> {
        SubdivisionGraph::new(self).hop_distance(a, b, max_hops)
    }
}

#[cfg(test)]
mod tests {
    use crate::kg::{KgOptions, KnowledgeGraph, ObjectId};

    fn g() -> KnowledgeGraph {
        KnowledgeGraph::from_triples(
            [
                ("Batman", "director", "Tim_Burton"),
                ("Batman", "starring", "Michael_Keaton"),
                ("Batman", "type", "Film"),
                ("Michael_Keaton", "type", "Actor"),
                ("Tim_Burton", "type", "Person"),
                ("Berlin", "mayor", "Kai"),
            ],
            &KgOptions::default(),
        )
        .unwrap()
    }

    fn v(g: &KnowledgeGraph, l: &str) -> ObjectId {
        g.vertex(l).unwrap().into()
    }

    #[test]
    fn vertex_distances() {
        let g = g();
        assert_eq!(g.hop_distance(v(&g, "Batman"), v(&g, "Tim_Burton"), 4).unwrap(), Some(2));
        assert_eq!(g.hop_distance(v(&g, "Batman"), v(&g, "Batman"), 1).unwrap(), Some(0));
        assert_eq!(g.hop_distance(v(&g, "Tim_Burton"), v(&g, "Actor"), 6).unwrap(), Some(6));
        assert_eq!(g.hop_distance(v(&g, "Tim_Burton"), v(&g, "Actor"), 5).unwrap(), None);
    }

    #[test]
    fn disconnected_is_unreachable() {
        let g = g();
        assert_eq!(g.hop_distance(v(&g, "Batman"), v(&g, "Berlin"), 3).unwrap(), None);
    }

    #[test]
    fn edge_objects() {
        let g = g();
        let director: ObjectId = g.edge("director").unwrap().into();
        let starring: ObjectId = g.edge("starring").unwrap().into();
        assert_eq!(g.hop_distance(v(&g, "Tim_Burton"), director, 4).unwrap(), Some(1));
        assert_eq!(g.hop_distance(director, v(&g, "Tim_Burton"), 4).unwrap(), Some(1));
        assert_eq!(g.hop_distance(director, starring, 4).unwrap(), Some(2));
        assert_eq!(g.hop_distance(director, director, 4).unwrap(), Some(0));
    }
}

//! Attention scores computed directly from raw local triples.
//!
//! The trainer uses the supports cached in each [`GeneralizedLocalKg`]; the
//! functions here recount from the graph and serve as the reference the
//! cached weights are checked against.

use crate::error::{Error, Result};
use crate::kg::{
    Anchor, EdgeId, GeneralizedTriple, KnowledgeGraph, ObjectId, VertexId, VertexKind,
};

/// `exp(count / |G_L(v)|)` for a triple of the GL-KG of vertex `v`.
///
/// `count` is the number of raw local triples generalizing to `g`. For a
/// class vertex, the raw triples are those of its instances.
pub fn attention_vertex(kg: &KnowledgeGraph, v: VertexId, g: &GeneralizedTriple) -> Result<f64> {
    let owner = ObjectId::Vertex(v);
    kg.check(owner)?;
    let members: Vec<VertexId> = match kg.kind(v) {
        VertexKind::Entity => vec![v],
        VertexKind::Class => kg.instances_of(v).to_vec(),
    };
    let mut count = 0usize;
    let mut denominator = 0usize;
    for m in members {
        let lkg = kg.local_kg(m.into())?;
        denominator += lkg.len();
        count += lkg
            .triples
            .iter()
            .filter(|t| t.edge == g.edge)
            .filter(|t| match g.anchor {
                Anchor::Head => g.head == v && t.head == m && kg.generalized(t.tail).contains(&g.tail),
                Anchor::Tail => g.tail == v && t.tail == m && kg.generalized(t.head).contains(&g.head),
                Anchor::Edge => false,
            })
            .count();
    }
    if denominator == 0 {
        return Err(Error::EmptyLocalKg(owner));
    }
    if count == 0 {
        return Err(Error::NotInGeneralizedKg(owner));
    }
    Ok((count as f64 / denominator as f64).exp())
}

/// Three-case attention for a generalized triple of edge `e`, selected by
/// the kinds of its endpoints.
pub fn attention_edge(kg: &KnowledgeGraph, e: EdgeId, g: &GeneralizedTriple) -> Result<f64> {
    let owner = ObjectId::Edge(e);
    kg.check(owner)?;
    if g.edge != e {
        return Err(Error::NotInGeneralizedKg(owner));
    }
    let lkg = kg.local_kg(owner)?;
    if lkg.is_empty() {
        return Err(Error::EmptyLocalKg(owner));
    }
    let head_matches = |h: VertexId| kg.generalized(h).contains(&g.head);
    let tail_matches = |t: VertexId| kg.generalized(t).contains(&g.tail);
    let count = match (kg.kind(g.head), kg.kind(g.tail)) {
        (VertexKind::Entity, VertexKind::Entity) => return Err(Error::EntityEntityForm),
        // (class, e, entity): heads of the class linked to that entity.
        (VertexKind::Class, VertexKind::Entity) => lkg
            .triples
            .iter()
            .filter(|t| t.tail == g.tail && head_matches(t.head))
            .count(),
        // (entity, e, class): tails of the class linked from that entity.
        (VertexKind::Entity, VertexKind::Class) => lkg
            .triples
            .iter()
            .filter(|t| t.head == g.head && tail_matches(t.tail))
            .count(),
        // (class, e, class): linked pairs of instances.
        (VertexKind::Class, VertexKind::Class) => lkg
            .triples
            .iter()
            .filter(|t| head_matches(t.head) && tail_matches(t.tail))
            .count(),
    };
    if count == 0 {
        return Err(Error::NotInGeneralizedKg(owner));
    }
    Ok((count as f64 / lkg.len() as f64).exp())
}

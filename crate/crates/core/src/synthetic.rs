//! Seeded synthetic knowledge graphs for tests and benchmarks.
//!
//! Entities are labelled `e<i>`, classes `C<i>` and relations `r<i>`; class
//! membership uses the default `type` edge.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kg::{EdgeId, KgOptions, KnowledgeGraph, VertexId, DEFAULT_TYPE_LABEL};

pub type LabelTriple = (String, String, String);

fn build(triples: &[LabelTriple]) -> Result<KnowledgeGraph> {
    KnowledgeGraph::from_triples(
        triples.iter().map(|(h, e, t)| (h.as_str(), e.as_str(), t.as_str())),
        &KgOptions::default(),
    )
}

fn typed(entity: usize, class: usize) -> LabelTriple {
    (format!("e{entity}"), DEFAULT_TYPE_LABEL.to_string(), format!("C{class}"))
}

fn fact(h: usize, r: usize, t: usize) -> LabelTriple {
    (format!("e{h}"), format!("r{r}"), format!("e{t}"))
}

/// Small random graph: every entity has one class, plus `facts` random
/// entity-to-entity triples. Some entities may end up with no facts.
pub fn random_kg(rng: &mut impl Rng, entities: usize, classes: usize, relations: usize, facts: usize) -> Result<KnowledgeGraph> {
    let mut triples: Vec<LabelTriple> = (0..entities).map(|e| typed(e, rng.gen_range(0..classes))).collect();
    for _ in 0..facts {
        triples.push(fact(
            rng.gen_range(0..entities),
            rng.gen_range(0..relations),
            rng.gen_range(0..entities),
        ));
    }
    build(&triples)
}

pub struct PlantedPairs {
    pub kg: KnowledgeGraph,
    /// Entity pairs whose GL-KGs are identical up to the owner.
    pub pairs: Vec<(VertexId, VertexId)>,
}

/// Background entities with random facts, plus `pairs` entity pairs that
/// share a class and an outgoing profile of `(relation, target class)`
/// steps. Each member of a pair reaches different target entities, and
/// planted entities never appear as tails, so both GL-KGs coincide.
pub fn planted_pairs(seed: u64, pairs: usize) -> Result<PlantedPairs> {
    const CLASSES: usize = 10;
    const PER_CLASS: usize = 12;
    const RELATIONS: usize = 8;
    const BACKGROUND_FACTS: usize = 3;
    const PROFILE: usize = 4;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background = CLASSES * PER_CLASS;
    let class_of = |e: usize| e % CLASSES;
    let mut triples: Vec<LabelTriple> = (0..background).map(|e| typed(e, class_of(e))).collect();
    // Relation r links class c to class c + r + 1, so relations never share
    // a class pair.
    let target_class = |c: usize, r: usize| (c + r + 1) % CLASSES;
    let member = |rng: &mut ChaCha8Rng, c: usize| rng.gen_range(0..PER_CLASS) * CLASSES + c;
    for h in 0..background {
        for _ in 0..BACKGROUND_FACTS {
            let r = rng.gen_range(0..RELATIONS);
            let t = member(&mut rng, target_class(class_of(h), r));
            triples.push(fact(h, r, t));
        }
    }

    let mut profiles: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    while profiles.len() < pairs {
        let class = rng.gen_range(0..CLASSES);
        let mut p: Vec<(usize, usize)> = (0..PROFILE)
            .map(|_| {
                let r = rng.gen_range(0..RELATIONS);
                (r, target_class(class, r))
            })
            .collect();
        p.sort_unstable();
        p.dedup();
        if p.len() == PROFILE && !profiles.iter().any(|(_, q)| *q == p) {
            profiles.push((class, p));
        }
    }

    let mut planted = Vec::new();
    for (i, (class, profile)) in profiles.iter().enumerate() {
        let class = *class;
        let (a, b) = (background + 2 * i, background + 2 * i + 1);
        for &owner in &[a, b] {
            triples.push(typed(owner, class));
            for &(r, c) in profile {
                let target = member(&mut rng, c);
                triples.push(fact(owner, r, target));
            }
        }
        planted.push((a, b));
    }

    let kg = build(&triples)?;
    let id = |e: usize| kg.vertex(&format!("e{e}")).expect("planted entity");
    let pairs = planted.iter().map(|&(a, b)| (id(a), id(b))).collect();
    Ok(PlantedPairs { kg, pairs })
}

pub struct ClusteredKg {
    pub kg: KnowledgeGraph,
    /// Held-out facts whose endpoints still occur in `kg`.
    pub test: Vec<(VertexId, EdgeId, VertexId)>,
}

/// Entities split evenly over `classes`, which form a random tree. Every
/// entity outside the root class points at members of its parent class
/// through relation `r<(c - 1) mod relations>`. Each entity gets
/// `per_entity` facts, and `test_fraction` of all facts is held out.
pub fn clustered_kg(
    seed: u64,
    entities: usize,
    classes: usize,
    relations: usize,
    per_entity: usize,
    test_fraction: f64,
) -> Result<ClusteredKg> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let class_of = |e: usize| e % classes;
    let members = |c: usize| (c..entities).step_by(classes).collect::<Vec<_>>();
    let parents: Vec<usize> = (0..classes).map(|c| if c == 0 { 0 } else { rng.gen_range(0..c) }).collect();
    let mut facts = Vec::new();
    for h in (0..entities).filter(|&h| class_of(h) != 0) {
        let c = class_of(h);
        let r = (c - 1) % relations;
        let target = members(parents[c]);
        for _ in 0..per_entity {
            if let Some(&t) = target.choose(&mut rng) {
                facts.push((h, r, t));
            }
        }
    }
    facts.sort_unstable();
    facts.dedup();
    facts.shuffle(&mut rng);
    let held = (facts.len() as f64 * test_fraction).round() as usize;
    let (test, train) = facts.split_at(held);

    let mut triples: Vec<LabelTriple> = (0..entities).map(|e| typed(e, class_of(e))).collect();
    triples.extend(train.iter().map(|&(h, r, t)| fact(h, r, t)));
    let kg = build(&triples)?;
    let test = test
        .iter()
        .filter_map(|&(h, r, t)| {
            Some((
                kg.vertex(&format!("e{h}"))?,
                kg.edge(&format!("r{r}"))?,
                kg.vertex(&format!("e{t}"))?,
            ))
        })
        .collect();
    Ok(ClusteredKg { kg, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::ObjectId;

    #[test]
    fn planted_pairs_share_gl_kgs() {
        let p = planted_pairs(7, 5).unwrap();
        assert_eq!(p.pairs.len(), 5);
        for &(a, b) in &p.pairs {
            let ga = p.kg.generalize(ObjectId::Vertex(a)).unwrap();
            let gb = p.kg.generalize(ObjectId::Vertex(b)).unwrap();
            assert_eq!(ga.denominator, gb.denominator);
            let strip = |g: &crate::kg::GeneralizedLocalKg| {
                g.triples.iter().map(|t| (t.anchor, t.edge, t.tail, t.support)).collect::<Vec<_>>()
            };
            assert_eq!(strip(&ga), strip(&gb));
            assert!(!ga.is_empty());
        }
    }

    #[test]
    fn clustered_sizes() {
        let c = clustered_kg(1, 979, 20, 10, 5, 0.1).unwrap();
        assert_eq!(c.kg.vertex_count(), 1000);
        assert!(!c.test.is_empty());
        let again = clustered_kg(1, 979, 20, 10, 5, 0.1).unwrap();
        assert_eq!(c.test, again.test);
    }
}

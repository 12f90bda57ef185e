use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kg::{Context, EdgeId, GeneralizedLocalKg, ObjectId, VertexId};

/// Rejection attempts per draw before falling back to an exact scan.
pub const MAX_ATTEMPTS: usize = 100;

/// Draws negatives for an owner uniformly from the objects of its own sort
/// whose GL-KG shares no generalized triple with the owner's.
///
/// Objects with an empty GL-KG neither own samples nor serve as negatives.
#[derive(Debug)]
pub struct NegativeSampler {
    vertex_count: usize,
    contexts: Vec<Option<Vec<Context>>>,
    vertices: Vec<ObjectId>,
    edges: Vec<ObjectId>,
    pools: Vec<OnceLock<Vec<ObjectId>>>,
}

impl NegativeSampler {
    /// `gl_kgs` must cover every object of one graph, in any order.
    pub fn new(vertex_count: usize, edge_count: usize, gl_kgs: &[GeneralizedLocalKg]) -> Self {
        let mut contexts = vec![None; vertex_count + edge_count];
        for g in gl_kgs {
            if !g.is_empty() {
                contexts[slot(vertex_count, g.owner)] = Some(g.contexts());
            }
        }
        let vertices = (0..vertex_count)
            .filter(|&i| contexts[i].is_some())
            .map(|i| ObjectId::Vertex(VertexId(i as u32)))
            .collect();
        let edges = (0..edge_count)
            .filter(|&i| contexts[vertex_count + i].is_some())
            .map(|i| ObjectId::Edge(EdgeId(i as u32)))
            .collect();
        let pools = (0..vertex_count + edge_count).map(|_| OnceLock::new()).collect();
        Self {
            vertex_count,
            contexts,
            vertices,
            edges,
            pools,
        }
    }

    fn contexts_of(&self, id: ObjectId) -> Option<&[Context]> {
        self.contexts
            .get(slot(self.vertex_count, id))
            .and_then(|c| c.as_deref())
    }

    /// True when both objects have GL-KGs and they share no triple.
    pub fn is_valid_negative(&self, owner: ObjectId, candidate: ObjectId) -> bool {
        if owner == candidate {
            return false;
        }
        match (self.contexts_of(owner), self.contexts_of(candidate)) {
            (Some(a), Some(b)) => disjoint(a, b),
            _ => false,
        }
    }

    fn universe(&self, owner: ObjectId) -> &[ObjectId] {
        match owner {
            ObjectId::Vertex(_) => &self.vertices,
            ObjectId::Edge(_) => &self.edges,
        }
    }

    fn pool(&self, owner: ObjectId) -> &[ObjectId] {
        self.pools[slot(self.vertex_count, owner)].get_or_init(|| {
            self.universe(owner)
                .iter()
                .copied()
                .filter(|&c| self.is_valid_negative(owner, c))
                .collect()
        })
    }

    /// `n` negatives for `owner`, drawn with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, owner: ObjectId, n: usize, rng: &mut R) -> Result<Vec<ObjectId>> {
        if self.contexts_of(owner).is_none() {
            return Err(Error::EmptyLocalKg(owner));
        }
        let universe = self.universe(owner);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut drawn = None;
            for _ in 0..MAX_ATTEMPTS {
                let c = universe[rng.gen_range(0..universe.len())];
                if self.is_valid_negative(owner, c) {
                    drawn = Some(c);
                    break;
                }
            }
            let c = match drawn {
                Some(c) => c,
                None => {
                    let pool = self.pool(owner);
                    if pool.is_empty() {
                        return Err(Error::NegativeSampling {
                            owner,
                            wanted: n,
                            reason: "no object of the same sort has a disjoint GL-KG".into(),
                        });
                    }
                    pool[rng.gen_range(0..pool.len())]
                }
            };
            debug_assert!(self.is_valid_negative(owner, c));
            out.push(c);
        }
        Ok(out)
    }
}

fn slot(vertex_count: usize, id: ObjectId) -> usize {
    match id {
        ObjectId::Vertex(v) => v.index(),
        ObjectId::Edge(e) => vertex_count + e.index(),
    }
}

fn disjoint(a: &[Context], b: &[Context]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KgOptions, KnowledgeGraph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn movies() -> KnowledgeGraph {
        KnowledgeGraph::from_triples(
            [
                ("Batman", "director", "Tim_Burton"),
                ("Batman", "starring", "Michael_Keaton"),
                ("Jaws", "director", "Spielberg"),
                ("Batman", "type", "Film"),
                ("Jaws", "type", "Film"),
                ("Michael_Keaton", "type", "Actor"),
                ("Tim_Burton", "type", "Person"),
                ("Spielberg", "type", "Person"),
            ],
            &KgOptions::default(),
        )
        .unwrap()
    }

    fn sampler(kg: &KnowledgeGraph) -> NegativeSampler {
        NegativeSampler::new(kg.vertex_count(), kg.edge_count(), &kg.generalize_all())
    }

    #[test]
    fn negatives_are_disjoint() {
        let kg = movies();
        let s = sampler(&kg);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let batman: ObjectId = kg.vertex("Batman").unwrap().into();
        let own = kg.generalize(batman).unwrap().contexts();
        for neg in s.sample(batman, 200, &mut rng).unwrap() {
            let theirs = kg.generalize(neg).unwrap().contexts();
            assert!(own.iter().all(|c| !theirs.contains(c)), "{}", kg.label(neg));
        }
    }

    #[test]
    fn shared_triple_excludes_candidate() {
        let kg = movies();
        let s = sampler(&kg);
        let v = |l| ObjectId::from(kg.vertex(l).unwrap());
        // Both films are directed by a Person.
        assert!(!s.is_valid_negative(v("Batman"), v("Jaws")));
        assert!(!s.is_valid_negative(v("Batman"), v("Film")));
        assert!(s.is_valid_negative(v("Batman"), v("Tim_Burton")));
        // Thing has no instances here, so no GL-KG.
        assert!(!s.is_valid_negative(v("Batman"), v("Thing")));
    }

    #[test]
    fn no_disjoint_candidate_is_an_error() {
        let kg = KnowledgeGraph::from_triples([("a", "r", "b")], &KgOptions::default()).unwrap();
        let s = sampler(&kg);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r: ObjectId = kg.edge("r").unwrap().into();
        assert!(matches!(s.sample(r, 1, &mut rng), Err(Error::NegativeSampling { .. })));
        let a: ObjectId = kg.vertex("a").unwrap().into();
        assert!(s.sample(a, 3, &mut rng).is_ok());
    }

    #[test]
    fn seeded_sampling_repeats() {
        let kg = movies();
        let s = sampler(&kg);
        let batman: ObjectId = kg.vertex("Batman").unwrap().into();
        let a = s.sample(batman, 20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = s.sample(batman, 20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }
}

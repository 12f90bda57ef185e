use std::collections::BTreeSet;
use std::path::PathBuf;

use gqc::embedding::EmbeddingStore;
use gqc::kg::{load_kg, match_patterns, KnowledgeGraph, Term, TriplePattern, Value, VertexId};
use gqc::phrase::{Candidate, CandidateSet, PhraseKind, PhraseMatch};
use gqc::query::{
    best_representations, enumerate_representations, execute, parse_query, score_representation, serialize_query,
    to_graph_query, GraphQuery, QueryRepresentation,
};
use gqc::structure::StructureMatrix;
use gqc::synthetic::random_kg;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn sample_kg(rng: &mut ChaCha8Rng) -> KnowledgeGraph {
    let entities = rng.gen_range(4..10);
    let facts = rng.gen_range(4..25);
    random_kg(rng, entities, 3, 3, facts).unwrap()
}

/// Patterns over variables `a`, `b`, `c` and constants, with a random
/// subset of the variables constrained to classes.
fn random_query(kg: &KnowledgeGraph, rng: &mut ChaCha8Rng) -> GraphQuery {
    let vars = ["a", "b", "c"];
    let relations: Vec<_> = kg.edges().filter(|&e| e != kg.type_edge()).collect();
    let classes: Vec<VertexId> = kg.class_vertices().collect();
    let term = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.7) {
            Term::var(vars[rng.gen_range(0..3)])
        } else {
            Term::Const(VertexId(rng.gen_range(0..kg.vertex_count() as u32)))
        }
    };
    let mut patterns = Vec::new();
    for _ in 0..rng.gen_range(1..4) {
        let h = term(rng);
        let t = term(rng);
        patterns.push(TriplePattern::new(h, Term::Const(relations[rng.gen_range(0..relations.len())]), t));
    }
    patterns[0].head = Term::var("a");
    let mut constraints = Vec::new();
    for v in vars {
        if rng.gen_bool(0.5) {
            constraints.push((v.to_string(), classes[rng.gen_range(0..classes.len())]));
        }
    }
    GraphQuery::new(patterns, constraints, "a")
}

fn set(kind: PhraseKind, text: &str, wh: bool, ids: Vec<gqc::kg::ObjectId>) -> CandidateSet {
    CandidateSet {
        phrase: PhraseMatch {
            text: text.into(),
            key: text.to_lowercase(),
            kind,
            span: (0, 0),
            wh,
        },
        candidates: ids
            .into_iter()
            .map(|id| Candidate {
                id,
                base_similarity: 1.0,
                score: 1.0,
            })
            .collect(),
        pruned: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kg = sample_kg(&mut rng);
        let gq = random_query(&kg, &mut rng);
        let text = serialize_query(&gq, &kg);
        prop_assert_eq!(parse_query(&text, &gq.answer_variable, &kg).unwrap(), gq);
    }

    #[test]
    fn relaxing_never_shrinks_answers(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kg = sample_kg(&mut rng);
        let gq = random_query(&kg, &mut rng);
        let exact: BTreeSet<Value> = execute(&gq, &kg).unwrap().into_iter().collect();
        let relaxed: BTreeSet<Value> = execute(&gq.relaxed(), &kg).unwrap().into_iter().collect();
        prop_assert!(exact.is_subset(&relaxed));
    }

    #[test]
    fn selection_finds_the_global_minimum(seed in any::<u64>(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kg = sample_kg(&mut rng);
        let mut store = EmbeddingStore::zeros(&kg, 3);
        for o in kg.objects() {
            store.vector_mut(o).iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        }
        let pick = |rng: &mut ChaCha8Rng, n: usize, vertices: bool| -> Vec<gqc::kg::ObjectId> {
            let mut ids: Vec<gqc::kg::ObjectId> = (0..n)
                .map(|_| if vertices {
                    VertexId(rng.gen_range(0..kg.vertex_count() as u32)).into()
                } else {
                    gqc::kg::EdgeId(rng.gen_range(0..kg.edge_count() as u32)).into()
                })
                .collect();
            ids.sort();
            ids.dedup();
            ids
        };
        let sets = vec![
            set(PhraseKind::Entity, "x", false, pick(&mut rng, 3, true)),
            set(PhraseKind::Relation, "r", false, pick(&mut rng, 2, false)),
            set(PhraseKind::Entity, "y", false, pick(&mut rng, 3, true)),
            set(PhraseKind::Relation, "s", false, pick(&mut rng, 2, false)),
            set(PhraseKind::Entity, "z", false, pick(&mut rng, 2, true)),
        ];
        let matrix = StructureMatrix::from_rows(&[vec![0, 1, 0], vec![0, 0, 0], vec![0, 2, 0]], 2).unwrap();
        let all: Vec<QueryRepresentation> = enumerate_representations(&sets, &matrix, 1_000_000).unwrap().collect();
        let mut scores: Vec<f64> = all.iter().map(|q| score_representation(q, &store).unwrap()).collect();
        scores.sort_by(f64::total_cmp);
        let best = best_representations(all.into_iter(), &store, k).unwrap();
        prop_assert_eq!(best.len(), k.min(scores.len()));
        for (i, (_, s)) in best.iter().enumerate() {
            prop_assert_eq!(*s, scores[i]);
        }
    }
}

/// The running example query binds exactly the instance pairs that satisfy
/// the representation's triples once each class is replaced by an instance.
#[test]
fn substitution_matches_regrounded_triples() {
    let kg = load_kg(fixture("movies/kg.tsv"), "type").unwrap();
    let v = |l: &str| kg.vertex(l).unwrap();
    let e = |l: &str| kg.edge(l).unwrap();
    let sets = vec![
        set(PhraseKind::Entity, "actor", false, vec![v("Actor").into()]),
        set(PhraseKind::Relation, "starred in", false, vec![e("starring").into()]),
        set(PhraseKind::Entity, "movies", false, vec![v("Film").into()]),
        set(PhraseKind::Relation, "directed by", false, vec![e("director").into()]),
        set(PhraseKind::Entity, "Tim Burton", false, vec![v("Tim_Burton").into()]),
    ];
    let rep = QueryRepresentation {
        vertices: vec![v("Actor"), v("Film"), v("Tim_Burton")],
        edges: vec![e("starring"), e("director")],
        placement: vec![(1, 0), (1, 2)],
    };
    let gq = to_graph_query(&rep, &sets, &kg).unwrap();
    let mut patterns = gq.patterns.clone();
    for (var, class) in &gq.type_constraints {
        patterns.push(TriplePattern::new(Term::var(var.as_str()), Term::Const(kg.type_edge()), Term::Const(*class)));
    }
    let got: BTreeSet<(Value, Value)> = match_patterns(&kg, &patterns)
        .unwrap()
        .into_iter()
        .map(|b| (b["actor"], b["movies"]))
        .collect();

    let has = |h, r, t| kg.triples().iter().any(|x| x.head == h && x.edge == r && x.tail == t);
    let mut want = BTreeSet::new();
    for &actor in kg.instances_of(v("Actor")) {
        for &film in kg.instances_of(v("Film")) {
            if has(film, e("starring"), actor) && has(film, e("director"), v("Tim_Burton")) {
                want.insert((Value::Vertex(actor), Value::Vertex(film)));
            }
        }
    }
    assert_eq!(want.len(), 2);
    assert_eq!(got, want);
}

use gqc::kg::{KgOptions, KnowledgeGraph, ObjectId, VertexId};
use gqc::phrase::{disambiguate, prune, Candidate, CandidateSet, Features, PhraseKind, PhraseMatch, Weights};
use proptest::prelude::*;

fn kg() -> KnowledgeGraph {
    let triples: Vec<(String, String, String)> = (0..12).map(|i| (format!("v{i}"), "r".into(), format!("v{}", (i + 1) % 12))).collect();
    KnowledgeGraph::from_triples(
        triples.iter().map(|(h, e, t)| (h.as_str(), e.as_str(), t.as_str())),
        &KgOptions::default(),
    )
    .unwrap()
}

fn phrase() -> PhraseMatch {
    PhraseMatch {
        text: "p".into(),
        key: "p".into(),
        kind: PhraseKind::Entity,
        span: (0, 1),
        wh: false,
    }
}

fn set_of(sims: &[f64]) -> CandidateSet {
    CandidateSet {
        phrase: phrase(),
        candidates: sims
            .iter()
            .enumerate()
            .map(|(i, &s)| Candidate {
                id: ObjectId::Vertex(VertexId(i as u32)),
                base_similarity: s,
                score: s,
            })
            .collect(),
        pruned: false,
    }
}

fn arb_weights() -> impl Strategy<Value = Weights> {
    (0.0f64..1.0, 0.01f64..1.0, 0.0f64..1.0).prop_map(|(sim, conn, hop)| Weights { sim, conn, hop })
}

fn arb_features(n: usize) -> impl Strategy<Value = Vec<Features>> {
    prop::collection::vec((0usize..6, 0u32..6), n).prop_map(|v| {
        v.into_iter()
            .map(|(c, h)| Features {
                connection_count: c,
                hop_count: if c == 0 { 5.0 } else { 1.0 + h as f64 / 2.0 },
            })
            .collect()
    })
}

fn arb_case() -> impl Strategy<Value = (Vec<f64>, Vec<Features>, Weights, usize)> {
    (1usize..10).prop_flat_map(|n| {
        (
            prop::collection::vec(0.001f64..1.0, n),
            arb_features(n),
            arb_weights(),
            0..n,
        )
    })
}

fn rank_of(set: &CandidateSet, id: ObjectId) -> usize {
    set.candidates.iter().position(|c| c.id == id).expect("candidate kept")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pruning_keeps_the_top_candidate(
        sims in prop::collection::vec(0.0f64..1.0, 1..12),
        t_s in prop::sample::select(vec![1.0, 2.0, 15.0, 100.0]),
    ) {
        let mut set = set_of(&sims);
        set.candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
        let top = set.candidates[0];
        prune(&mut set, t_s);
        prop_assert_eq!(set.candidates[0], top);
        prop_assert!(set.candidates.iter().all(|c| c.score >= top.score / t_s));
    }

    #[test]
    fn more_connections_never_lower_the_rank((sims, feats, weights, bump) in arb_case()) {
        let kg = kg();
        let set = set_of(&sims);
        let id = set.candidates[bump].id;
        let before = disambiguate(std::slice::from_ref(&set), std::slice::from_ref(&feats), weights, f64::INFINITY, &kg);
        let mut more = feats.clone();
        more[bump].connection_count += 1;
        let after = disambiguate(std::slice::from_ref(&set), std::slice::from_ref(&more), weights, f64::INFINITY, &kg);
        prop_assert!(rank_of(&after[0], id) <= rank_of(&before[0], id));
        prop_assert_eq!(after[0].candidates[0].score, 1.0);
    }

    #[test]
    fn disambiguation_is_deterministic((sims, feats, weights, _) in arb_case(), t_s in 1.0f64..50.0) {
        let kg = kg();
        let set = set_of(&sims);
        let a = disambiguate(std::slice::from_ref(&set), std::slice::from_ref(&feats), weights, t_s, &kg);
        let b = disambiguate(std::slice::from_ref(&set), std::slice::from_ref(&feats), weights, t_s, &kg);
        prop_assert_eq!(a, b);
    }
}

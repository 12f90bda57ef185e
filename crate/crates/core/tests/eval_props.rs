use gqc::embedding::{train, EmbeddingStore, TrainConfig};
use gqc::eval::{f1, link_prediction, score_answers};
use gqc::kg::{EdgeId, VertexId};
use gqc::synthetic::random_kg;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn f1_is_the_harmonic_mean(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let got = f1(p, r);
        if p == 0.0 && r == 0.0 {
            prop_assert_eq!(got, 0.0);
        } else {
            let harmonic = 2.0 / (1.0 / p + 1.0 / r);
            prop_assert!((got - harmonic).abs() <= 1e-12, "{got} vs {harmonic}");
            prop_assert!(got <= p.max(r) + 1e-15 && got >= p.min(r) - 1e-15);
        }
    }

    #[test]
    fn per_question_scores_are_set_ratios(
        gold in prop::collection::btree_set(0u8..12, 1..6),
        returned in prop::collection::btree_set(0u8..12, 0..8),
    ) {
        let s = |xs: &std::collections::BTreeSet<u8>| xs.iter().map(|x| format!("a{x}")).collect();
        let scores = score_answers(&s(&gold), &s(&returned));
        let hit = gold.intersection(&returned).count() as f64;
        prop_assert_eq!(scores.recall, hit / gold.len() as f64);
        let precision = if returned.is_empty() { 0.0 } else { hit / returned.len() as f64 };
        prop_assert_eq!(scores.precision, precision);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn link_prediction_stays_in_range(seed in any::<u64>(), trained in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kg = random_kg(&mut rng, 12, 3, 3, 20).unwrap();
        let store = if trained {
            let config = TrainConfig { dim: 8, epochs: 5, seed, ..TrainConfig::default() };
            match train(&kg, &config) {
                Ok((s, _)) => s,
                Err(_) => EmbeddingStore::zeros(&kg, 8),
            }
        } else {
            EmbeddingStore::zeros(&kg, 8)
        };
        let test: Vec<(VertexId, EdgeId, VertexId)> = (0..10)
            .map(|_| {
                (
                    VertexId(rng.gen_range(0..kg.vertex_count() as u32)),
                    EdgeId(rng.gen_range(0..kg.edge_count() as u32)),
                    VertexId(rng.gen_range(0..kg.vertex_count() as u32)),
                )
            })
            .collect();
        let lp = link_prediction(&store, &test, 0);
        prop_assert_eq!(lp.rankings, 20);
        prop_assert!((0.0..=1.0).contains(&lp.hits_at_10));
        prop_assert!(lp.mean_rank >= 1.0 && lp.mean_rank <= kg.vertex_count() as f64);
    }
}

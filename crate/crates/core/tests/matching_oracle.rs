mod support;

use std::collections::BTreeSet;

use exview::graph::{Graph, Labeled, NodeId};
use exview::matching::{has_match, match_pattern};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{brute_matches, random_graph, random_pattern};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_equal_brute_force(seed in any::<u64>(), k in 1usize..=4, n in 0usize..=7, p in 0.2f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pattern = random_pattern(&mut rng, k);
        let g: Graph = random_graph(&mut rng, n, 1, 2, 2, p);
        let found: BTreeSet<Vec<NodeId>> = match_pattern(&pattern, &g).into_iter().map(|m| m.map).collect();
        let want = brute_matches(&pattern, &g);
        prop_assert_eq!(has_match(&pattern, &g), !want.is_empty());
        prop_assert_eq!(found, want);
    }

    #[test]
    fn a_graph_matches_itself_induced(seed in any::<u64>(), k in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pattern = random_pattern(&mut rng, k);
        let g = Graph::from_parts(
            1,
            (0..k).map(|v| (pattern.node_type(v), vec![0.0])),
            pattern.edge_list().into_iter().map(|e| (e.u, e.v, e.edge_type)),
        ).unwrap();
        prop_assert!(match_pattern(&pattern, &g).iter().any(|m| m.map == (0..k).collect::<Vec<_>>()));
    }
}

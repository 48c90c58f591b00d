mod common;

use std::collections::BTreeSet;

use kgexplore_core::proto::{validate_graph, GraphElement, PrototypeGraph};
use kgexplore_core::sample::{random_graph, SampleLimits};
use kgexplore_core::sparql::{generate_select, QueryOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn assert_tree(g: &PrototypeGraph) {
    let ids: Vec<usize> = g.nodes.iter().map(|n| n.node_id).collect();
    assert_eq!(ids, (0..g.nodes.len()).collect::<Vec<_>>());
    assert_eq!(g.edges.len() + 1, g.nodes.len());
    let mut reached = BTreeSet::from([g.root_node_id]);
    let mut frontier = vec![g.root_node_id];
    while let Some(n) = frontier.pop() {
        for e in &g.edges {
            for (a, b) in [(e.source_node_id, e.target_node_id), (e.target_node_id, e.source_node_id)] {
                if a == n && reached.insert(b) {
                    frontier.push(b);
                }
            }
        }
    }
    assert_eq!(reached.len(), g.nodes.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]
    #[test]
    fn edits_preserve_validity(seed in any::<u64>(), removals in proptest::collection::vec(any::<(u8, u8)>(), 0..4)) {
        let o = common::ontology();
        let s = common::store();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limits = SampleLimits { max_nodes: 6, max_constraints: 3 };
        let mut g = random_graph(&o, &s, limits, &mut rng);
        prop_assert!(validate_graph(&g, &o).is_empty());
        assert_tree(&g);
        let json = serde_json::to_string(&g).unwrap();
        prop_assert_eq!(serde_json::from_str::<PrototypeGraph>(&json).unwrap(), g.clone());
        for (kind, pick) in removals {
            let element = match kind % 3 {
                0 if !g.edges.is_empty() => GraphElement::Edge { edge_index: pick as usize % g.edges.len() },
                1 => GraphElement::Node { node_id: pick as usize % g.nodes.len() },
                _ => {
                    let node = pick as usize % g.nodes.len();
                    GraphElement::Constraint { node_id: node, constraint_index: 0 }
                }
            };
            if let Ok(next) = g.remove_element(element) {
                prop_assert!(validate_graph(&next, &o).is_empty(), "{:?}", next);
                assert_tree(&next);
                prop_assert!(next.nodes.len() + next.constraint_count() < g.nodes.len() + g.constraint_count());
                g = next;
            }
        }
        let a = generate_select(&g, &o, &QueryOptions::default()).unwrap();
        let b = generate_select(&serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap(), &o, &QueryOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}

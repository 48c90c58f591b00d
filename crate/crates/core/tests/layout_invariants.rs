mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use kgexplore_core::layout::{pack_hierarchy, MinimapLayout};
use kgexplore_core::ontology::{OntologyClass, OntologyModel};
use kgexplore_core::rdf::Iri;
use proptest::prelude::*;

fn hierarchy(parents: &[Vec<usize>], counts: &[u64]) -> OntologyModel {
    let iri = |i: usize| Iri::new(format!("http://ex.org/C{i:04}")).unwrap();
    let classes = parents.iter().zip(counts).enumerate().map(|(i, (ps, &n))| OntologyClass {
        iri: iri(i),
        label: format!("C{i}"),
        parents: ps.iter().map(|&p| iri(p)).collect(),
        instance_count: n,
    });
    OntologyModel::new(classes, vec![]).unwrap()
}

/// Each class gets up to two parents among the classes before it.
fn random_parents(n: usize, seed: u64) -> (Vec<Vec<usize>>, Vec<u64>) {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut next = move |m: u64| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) % m
    };
    let parents = (0..n)
        .map(|i| {
            if i == 0 || next(10) == 0 {
                return vec![];
            }
            let k = 1 + next(2) as usize;
            (0..k).map(|_| next(i as u64) as usize).collect::<BTreeSet<_>>().into_iter().collect()
        })
        .collect();
    let counts = (0..n).map(|_| if next(3) == 0 { 0 } else { next(500) }).collect();
    (parents, counts)
}

fn check(layout: &MinimapLayout, ontology: &OntologyModel) {
    assert_eq!(
        layout.circles.len(),
        ontology.class_count() + usize::from(layout.root_iri.as_ref().is_some_and(OntologyModel::is_top))
    );
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    for c in &layout.circles {
        assert!(c.radius > 0.0);
        if let Some(p) = &c.parent {
            let parent = layout.get(p).unwrap();
            assert_eq!(c.depth, parent.depth + 1);
            let reach = dist(c.center, parent.center) + c.radius;
            assert!(reach <= parent.radius + 1e-6 * parent.radius, "{} escapes {}", c.class_iri, p);
        } else {
            assert_eq!(c.depth, 0);
        }
    }
    let mut by_parent: std::collections::BTreeMap<&Iri, Vec<_>> = Default::default();
    for c in &layout.circles {
        if let Some(p) = &c.parent {
            by_parent.entry(p).or_default().push(c);
        }
    }
    for siblings in by_parent.values() {
        for (i, a) in siblings.iter().enumerate() {
            for b in &siblings[i + 1..] {
                let gap = dist(a.center, b.center) - (a.radius + b.radius);
                assert!(gap >= -1e-6 * a.radius.max(b.radius), "{} overlaps {}", a.class_iri, b.class_iri);
            }
        }
    }
}

#[test]
fn thousand_class_hierarchies() {
    for seed in 0..5 {
        let (parents, counts) = random_parents(1000, seed);
        let o = hierarchy(&parents, &counts);
        let start = Instant::now();
        let layout = pack_hierarchy(&o);
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs_f64() < 1.0, "{elapsed:?}");
        check(&layout, &o);
        assert_eq!(pack_hierarchy(&o), layout);
    }
}

#[test]
fn flat_hierarchy_of_many_siblings() {
    let parents: Vec<Vec<usize>> = (0..400).map(|i| if i == 0 { vec![] } else { vec![0] }).collect();
    let counts: Vec<u64> = (0..400).map(|i| (i * 37 % 101) as u64).collect();
    let o = hierarchy(&parents, &counts);
    check(&pack_hierarchy(&o), &o);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn small_hierarchies_hold_invariants(seed in any::<u64>(), n in 1usize..60) {
        let (parents, counts) = random_parents(n, seed);
        let o = hierarchy(&parents, &counts);
        check(&pack_hierarchy(&o), &o);
    }
}

fn ancestors_in(layout: &MinimapLayout, class: &Iri) -> Vec<Iri> {
    let mut out = vec![];
    let mut cur = layout.get(class).and_then(|c| c.parent.clone());
    while let Some(p) = cur {
        cur = layout.get(&p).and_then(|c| c.parent.clone());
        out.push(p);
    }
    out
}

#[test]
fn highlights_on_fixture() {
    use kgexplore_core::layout::highlight_classes;
    use kgexplore_core::proto::new_graph;
    let o = common::ontology();
    let layout = pack_hierarchy(&o);
    check(&layout, &o);
    let ex = |s: &str| Iri::new(format!("http://ex.org/{s}")).unwrap();

    // a query inside the person hierarchy stays under one non-root ancestor
    let local = new_graph(&ex("hasCaregiver"), &o).unwrap();
    let lit = highlight_classes(&layout, &local).unwrap();
    assert_eq!(lit.len(), 2);
    let shared: BTreeSet<Iri> = ancestors_in(&layout, &lit[0].class_iri)
        .into_iter()
        .filter(|a| ancestors_in(&layout, &lit[1].class_iri).contains(a))
        .collect();
    assert!(shared.contains(&ex("Person")));

    // person and work sit in different top-level subtrees
    let fig1 = new_graph(&ex("author"), &o)
        .unwrap()
        .add_edge(1, &ex("previousWork"), &ex("Work"), &o)
        .unwrap();
    let lit = highlight_classes(&layout, &fig1).unwrap();
    assert_eq!(lit.iter().map(|c| c.class_iri.clone()).collect::<Vec<_>>(), vec![ex("Person"), ex("Work")]);
    assert_eq!(lit[0].parent, layout.root_iri);
    assert_eq!(lit[1].parent, layout.root_iri);
}

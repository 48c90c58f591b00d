mod common;

use std::collections::BTreeMap;

use common::{fixture, manifest, ontology, read_triples, store};
use kgexplore_core::ontology::{build_ontology_with_report, PropertyKind};
use kgexplore_core::rdf::{parse_str, write_ntriples, Iri, RdfFormat};
use kgexplore_core::topics::class_document;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;

/// Statements in an N-Triples file, counted line by line.
fn count_nt_statements(text: &str) -> usize {
    let statement = Regex::new(r#"^\s*(<[^>]*>|_:\S+)\s+<[^>]*>\s+(<[^>]*>|_:\S+|".*"(\^\^<[^>]*>|@[A-Za-z0-9-]+)?)\s*\.\s*$"#)
        .unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .inspect(|l| assert!(statement.is_match(l), "not a statement: {l}"))
        .count()
}

#[test]
fn statement_counts_match_line_counter() {
    let m = manifest();
    for (name, expected) in [
        ("ontology.nt", &m["ontology"]["statements"]),
        ("instances.nt", &m["instances"]["statements"]),
        ("fig1.nt", &m["fig1"]["statements"]),
    ] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let lines = count_nt_statements(&text);
        assert_eq!(lines as u64, expected.as_u64().unwrap(), "{name}");
        assert_eq!(read_triples(name).len(), lines, "{name}");
    }
    let declarations = std::fs::read_to_string(fixture("ontology.nt"))
        .unwrap()
        .lines()
        .filter(|l| l.ends_with("<http://www.w3.org/2002/07/owl#Class> ."))
        .count();
    assert_eq!(declarations, 50);
}

#[test]
fn turtle_and_ntriples_agree() {
    let mut ttl = read_triples("ontology.ttl");
    let mut nt = read_triples("ontology.nt");
    ttl.sort();
    nt.sort();
    assert_eq!(ttl, nt);
}

#[test]
fn ontology_matches_manifest() {
    let m = &manifest()["ontology"];
    let (o, report) = build_ontology_with_report(&read_triples("ontology.ttl")).unwrap();
    assert_eq!(o.class_count() as u64, m["classes"].as_u64().unwrap());
    assert_eq!(o.property_count() as u64, m["properties"].as_u64().unwrap());
    let objects = o.properties().filter(|p| p.kind == PropertyKind::Object).count();
    assert_eq!(objects as u64, m["objectProperties"].as_u64().unwrap());
    assert_eq!(report.ignored_triples as u64, m["ignoredStatements"].as_u64().unwrap());
    for p in o.properties() {
        if p.kind == PropertyKind::Object {
            for c in p.domain.iter().chain(&p.range) {
                assert!(o.class(c).is_some(), "{c} unresolved");
            }
        }
    }
    o.check_integrity().unwrap();
}

#[test]
fn ntriples_round_trip() {
    for name in ["ontology.ttl", "instances.nt", "fig1.nt"] {
        let mut original = read_triples(name);
        let mut again = parse_str(&write_ntriples(&original), RdfFormat::NTriples).unwrap();
        original.sort();
        again.sort();
        assert_eq!(original, again, "{name}");
    }
}

#[test]
fn ontology_build_is_order_insensitive() {
    let reference = ontology();
    let mut triples = read_triples("ontology.nt");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        triples.shuffle(&mut rng);
        let (shuffled, _) = build_ontology_with_report(&triples).unwrap();
        assert_eq!(shuffled, reference);
    }
}

#[test]
fn instance_counts_match_manifest() {
    let m = &manifest()["instances"];
    let s = store();
    for (p, n) in m["prevalence"].as_object().unwrap() {
        assert_eq!(s.prevalence(&Iri::new(p.as_str()).unwrap()), n.as_u64().unwrap(), "{p}");
    }
    for (c, n) in m["typeCounts"].as_object().unwrap() {
        assert_eq!(s.direct_instances(&Iri::new(c.as_str()).unwrap()).count() as u64, n.as_u64().unwrap(), "{c}");
    }
}

#[test]
fn class_documents_follow_template() {
    let o = ontology();
    let ex = |s: &str| Iri::new(format!("http://ex.org/{s}")).unwrap();
    let doc = |s: &str| class_document(o.class(&ex(s)).unwrap(), &o).text;
    assert_eq!(doc("Medication"), "Class: Medication. Parents: none. Properties: none.");
    assert_eq!(
        doc("Ship"),
        "Class: Ship. Parents: Mean of transportation. Properties: port (Port)."
    );
    // documents regenerate identically from the model
    let first: BTreeMap<_, _> = o.classes().map(|c| (c.iri.clone(), class_document(c, &o))).collect();
    let again: BTreeMap<_, _> = ontology()
        .classes()
        .map(|c| (c.iri.clone(), class_document(c, &o)))
        .collect();
    assert_eq!(first, again);
}

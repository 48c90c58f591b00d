#![allow(dead_code)]

use std::path::PathBuf;

use kgexplore_core::ontology::{build_ontology, OntologyModel};
use kgexplore_core::rdf::{parse_rdf, RdfFormat, Triple};
use kgexplore_core::store::InstanceStore;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_triples(name: &str) -> Vec<Triple> {
    let path = fixture(name);
    let file = std::fs::File::open(&path).unwrap();
    parse_rdf(file, RdfFormat::from_path(&path)).unwrap()
}

pub fn ontology() -> OntologyModel {
    build_ontology(&read_triples("ontology.ttl")).unwrap()
}

pub fn store() -> InstanceStore {
    InstanceStore::new(read_triples("instances.nt"))
}

pub fn manifest() -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(fixture("manifest.json")).unwrap()).unwrap()
}

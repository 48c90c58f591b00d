//! Ontology exploration engine.

pub mod bundle;
pub mod embed;
pub mod exec;
pub mod layout;
pub mod ontology;
pub mod proto;
pub mod rdf;
pub mod results;
pub mod sample;
pub mod sparql;
pub mod store;
pub mod suggest;
pub mod topics;

pub use exec::Exec;

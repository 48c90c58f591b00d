//! RDF terms, vocabulary, and the N-Triples/Turtle reader and N-Triples writer.

mod parse;
mod term;
pub(crate) mod value;
pub mod vocab;
mod write;

pub use parse::{parse_rdf, parse_str, ParseError, RdfFormat, SKOLEM_PREFIX};
pub use term::{DatatypeCategory, Iri, Literal, Term, TermError, Triple};
pub use value::{DateTimeValue, DateValue, Decimal};
pub use write::{write_ntriples, write_term};
pub(crate) use write::write_literal;

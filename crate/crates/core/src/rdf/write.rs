use std::fmt::Write as _;

use super::term::{Literal, Term, Triple};
use super::vocab::xsd;

/// Serializes triples as N-Triples, one statement per line.
pub fn write_ntriples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut out = String::new();
    for t in triples {
        let _ = writeln!(
            out,
            "<{}> <{}> {} .",
            t.subject,
            t.predicate,
            write_term(&t.object)
        );
    }
    out
}

/// N-Triples (and SPARQL) syntax for a term.
pub fn write_term(term: &Term) -> String {
    match term {
        Term::Iri(iri) => format!("<{iri}>"),
        Term::Literal(lit) => write_literal(lit),
    }
}

pub(crate) fn write_literal(lit: &Literal) -> String {
    let mut out = String::with_capacity(lit.lexical().len() + 2);
    out.push('"');
    escape_into(lit.lexical(), &mut out);
    out.push('"');
    if let Some(tag) = lit.language() {
        out.push('@');
        out.push_str(tag);
    } else if lit.datatype() != &xsd::string() {
        let _ = write!(out, "^^<{}>", lit.datatype());
    }
    out
}

pub(crate) fn escape_into(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
}

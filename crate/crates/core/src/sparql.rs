//! SPARQL generation for prototype graphs, plus the literal comparison rules
//! shared by the generated FILTERs and the in-memory matcher.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ontology::OntologyModel;
use crate::proto::{validate_graph, Constraint, Diagnostic, NodeId, Operator, PrototypeGraph};
use crate::rdf::vocab::rdfs;
use crate::rdf::{write_literal, DatatypeCategory, DateTimeValue, DateValue, Decimal, Iri, Literal};

pub const DEFAULT_LIMIT: u32 = 12;
pub const MAX_LIMIT: u32 = 200;

/// How node class membership is expressed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TypeMode {
    /// `?v a <C>`: only explicit type triples count.
    #[default]
    Exact,
    /// `?v a/rdfs:subClassOf* <C>`: instances of subclasses count too. The
    /// endpoint must hold the schema's subclass triples.
    SubclassClosure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryOptions {
    /// `None` omits the LIMIT clause; values above [`MAX_LIMIT`] are clamped.
    pub limit: Option<u32>,
    pub offset: u32,
    pub type_mode: TypeMode,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            limit: Some(DEFAULT_LIMIT),
            offset: 0,
            type_mode: TypeMode::Exact,
        }
    }
}

pub fn node_var(node: NodeId) -> String {
    format!("v{node}")
}

pub fn constraint_var(node: NodeId, index: usize) -> String {
    format!("v{node}_c{index}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintVariable {
    pub node_id: NodeId,
    pub constraint_index: usize,
    pub variable: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VariableMap {
    pub nodes: BTreeMap<NodeId, String>,
    pub constraints: Vec<ConstraintVariable>,
}

impl VariableMap {
    pub fn for_graph(graph: &PrototypeGraph) -> Self {
        let mut map = VariableMap::default();
        for node in &graph.nodes {
            map.nodes.insert(node.node_id, node_var(node.node_id));
        }
        for node in &graph.nodes {
            for index in 0..node.constraints.len() {
                map.constraints.push(ConstraintVariable {
                    node_id: node.node_id,
                    constraint_index: index,
                    variable: constraint_var(node.node_id, index),
                });
            }
        }
        map
    }

    /// Projected variables in SELECT order.
    pub fn variables(&self) -> Vec<&str> {
        self.nodes
            .values()
            .chain(self.constraints.iter().map(|c| &c.variable))
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneratedQuery {
    pub text: String,
    pub variable_map: VariableMap,
    pub limit: Option<u32>,
    pub offset: u32,
}

impl GeneratedQuery {
    fn bare(text: String) -> Self {
        GeneratedQuery {
            text,
            variable_map: VariableMap::default(),
            limit: None,
            offset: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SparqlError {
    #[error("graph is invalid: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    InvalidGraph(Vec<Diagnostic>),
}

pub fn generate_select(
    graph: &PrototypeGraph,
    ontology: &OntologyModel,
    options: &QueryOptions,
) -> Result<GeneratedQuery, SparqlError> {
    let diagnostics = validate_graph(graph, ontology);
    if !diagnostics.is_empty() {
        return Err(SparqlError::InvalidGraph(diagnostics));
    }
    let variable_map = VariableMap::for_graph(graph);
    let mut text = String::from(match options.type_mode {
        TypeMode::Exact => "SELECT",
        TypeMode::SubclassClosure => "SELECT DISTINCT",
    });
    for var in variable_map.variables() {
        let _ = write!(text, " ?{var}");
    }
    text.push_str(" WHERE {");
    for id in graph.bfs_order() {
        let class = &graph.nodes[id].class_iri;
        if OntologyModel::is_top(class) {
            continue;
        }
        match options.type_mode {
            TypeMode::Exact => {
                let _ = write!(text, " ?v{id} a <{class}> .");
            }
            TypeMode::SubclassClosure => {
                let _ = write!(text, " ?v{id} a/<{}>* <{class}> .", rdfs::SUB_CLASS_OF);
            }
        }
    }
    for e in &graph.edges {
        let _ = write!(
            text,
            " ?v{} <{}> ?v{} .",
            e.source_node_id, e.property_iri, e.target_node_id
        );
    }
    for node in &graph.nodes {
        for (index, c) in node.constraints.iter().enumerate() {
            let var = constraint_var(node.node_id, index);
            let _ = write!(
                text,
                " ?v{} <{}> ?{var} . FILTER({})",
                node.node_id,
                c.property_iri,
                filter_expression(&var, c)
            );
        }
    }
    text.push_str(" }");
    let limit = options.limit.map(|l| l.min(MAX_LIMIT));
    if let Some(l) = limit {
        let _ = write!(text, " LIMIT {l}");
    }
    if options.offset > 0 {
        let _ = write!(text, " OFFSET {}", options.offset);
    }
    Ok(GeneratedQuery {
        text,
        variable_map,
        limit,
        offset: options.offset,
    })
}

/// Operands without a comparable value space compare by term identity.
fn uses_term_identity(operand: &Literal) -> bool {
    matches!(
        operand.category(),
        DatatypeCategory::Other | DatatypeCategory::LangString
    )
}

fn filter_expression(var: &str, c: &Constraint) -> String {
    let operand = write_literal(&c.operand);
    match c.operator {
        Operator::Contains => format!("CONTAINS(?{var}, {operand})"),
        Operator::Eq if uses_term_identity(&c.operand) => format!("sameTerm(?{var}, {operand})"),
        Operator::Ne if uses_term_identity(&c.operand) => {
            format!("isLiteral(?{var}) && !sameTerm(?{var}, {operand})")
        }
        // an IRI value is never "not equal" to a literal constraint
        Operator::Ne => format!("isLiteral(?{var}) && ?{var} != {operand}"),
        op => format!("?{var} {} {operand}", op.symbol()),
    }
}

pub fn generate_prevalence_count(property: &Iri) -> GeneratedQuery {
    GeneratedQuery::bare(format!("SELECT (COUNT(*) AS ?c) WHERE {{ ?s <{property}> ?o . }}"))
}

pub fn generate_instance_count(class: &Iri) -> GeneratedQuery {
    GeneratedQuery::bare(format!(
        "SELECT (COUNT(DISTINCT ?s) AS ?c) WHERE {{ ?s a <{class}> . }}"
    ))
}

/// One batched lookup of `rdfs:label` values for the given resources.
pub fn generate_label_lookup(iris: &[Iri]) -> GeneratedQuery {
    let mut text = String::from("SELECT ?s ?label WHERE { VALUES ?s {");
    for iri in iris {
        let _ = write!(text, " <{iri}>");
    }
    let _ = write!(text, " }} ?s <{}> ?label . }}", rdfs::LABEL);
    GeneratedQuery::bare(text)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error("cannot compare <{left}> with <{right}>")]
    IncomparableDatatypes { left: Iri, right: Iri },
}

enum Numeric {
    Exact(Decimal),
    Double(f64),
}

impl Numeric {
    fn of(lit: &Literal) -> Option<Numeric> {
        match lit.category() {
            DatatypeCategory::Integer | DatatypeCategory::Decimal => Decimal::parse(lit.lexical()).map(Numeric::Exact),
            DatatypeCategory::Double => crate::rdf::value::parse_double(lit.lexical()).map(Numeric::Double),
            _ => None,
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            Numeric::Exact(d) => d.to_f64(),
            Numeric::Double(x) => *x,
        }
    }
}

fn apply(op: Operator, ord: Ordering) -> bool {
    match op {
        Operator::Eq => ord == Ordering::Equal,
        Operator::Ne => ord != Ordering::Equal,
        Operator::Lt => ord == Ordering::Less,
        Operator::Le => ord != Ordering::Greater,
        Operator::Gt => ord == Ordering::Greater,
        Operator::Ge => ord != Ordering::Less,
        Operator::Contains => false,
    }
}

fn same_term(a: &Literal, b: &Literal) -> bool {
    a.lexical() == b.lexical()
        && a.datatype() == b.datatype()
        && match (a.language(), b.language()) {
            (Some(x), Some(y)) => x.eq_ignore_ascii_case(y),
            (None, None) => true,
            _ => false,
        }
}

/// Evaluates `a op b` where `a` is a data value and `b` the constraint
/// operand. Mirrors the FILTER emitted by [`generate_select`]: an `Err` is a
/// SPARQL evaluation error, which a FILTER treats as false.
pub fn compare_literal(a: &Literal, op: Operator, b: &Literal) -> Result<bool, CompareError> {
    use DatatypeCategory as C;
    let incomparable = || CompareError::IncomparableDatatypes {
        left: a.datatype().clone(),
        right: b.datatype().clone(),
    };
    if op != Operator::Contains && uses_term_identity(b) {
        return match op {
            Operator::Eq => Ok(same_term(a, b)),
            Operator::Ne => Ok(!same_term(a, b)),
            _ => Err(incomparable()),
        };
    }
    if !a.is_well_typed() || !b.is_well_typed() {
        return Err(incomparable());
    }
    let (ca, cb) = (a.category(), b.category());
    if op == Operator::Contains {
        return match (ca, cb) {
            (C::String | C::LangString, C::String) => Ok(a.lexical().contains(b.lexical())),
            _ => Err(incomparable()),
        };
    }
    if ca.is_numeric() && cb.is_numeric() {
        let (x, y) = (Numeric::of(a).ok_or_else(incomparable)?, Numeric::of(b).ok_or_else(incomparable)?);
        return Ok(match (x, y) {
            (Numeric::Exact(x), Numeric::Exact(y)) => apply(op, x.cmp(&y)),
            (x, y) => {
                let (x, y) = (x.to_f64(), y.to_f64());
                match op {
                    Operator::Eq => x == y,
                    Operator::Ne => x != y,
                    Operator::Lt => x < y,
                    Operator::Le => x <= y,
                    Operator::Gt => x > y,
                    Operator::Ge => x >= y,
                    Operator::Contains => false,
                }
            }
        });
    }
    let ord = match (ca, cb) {
        (C::String, C::String) => Some(a.lexical().as_bytes().cmp(b.lexical().as_bytes())),
        (C::Date, C::Date) => {
            let (x, y) = (DateValue::parse(a.lexical()), DateValue::parse(b.lexical()));
            x.zip(y).and_then(|(x, y)| x.compare(&y))
        }
        (C::DateTime, C::DateTime) => {
            let (x, y) = (DateTimeValue::parse(a.lexical()), DateTimeValue::parse(b.lexical()));
            x.zip(y).and_then(|(x, y)| x.compare(&y))
        }
        (C::Boolean, C::Boolean) => {
            let v = |s: &str| matches!(s, "true" | "1");
            Some(v(a.lexical()).cmp(&v(b.lexical())))
        }
        _ => None,
    };
    ord.map(|o| apply(op, o)).ok_or_else(incomparable)
}

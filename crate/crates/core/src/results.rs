//! Query results: SPARQL JSON results parsing, assembly of bindings into
//! prototype-shaped instances, and the write-once prevalence cache.

use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::proto::{NodeId, PrototypeGraph};
use crate::rdf::{Iri, Literal, Term};
use crate::sparql::VariableMap;

/// One solution: variable name (without `?`) to term.
pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResultsError {
    #[error("malformed results document: {0}")]
    MalformedResults(String),
    #[error("binding {index} lacks variable ?{variable}")]
    MissingVariable { index: usize, variable: String },
    #[error("binding {index} has a {found} for ?{variable}")]
    UnexpectedTerm {
        index: usize,
        variable: String,
        found: &'static str,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectResults {
    pub vars: Vec<String>,
    pub bindings: Vec<Binding>,
}

fn malformed(msg: impl Into<String>) -> ResultsError {
    ResultsError::MalformedResults(msg.into())
}

fn parse_term(value: &Value) -> Result<Term, ResultsError> {
    let obj = value.as_object().ok_or_else(|| malformed("term is not an object"))?;
    let kind = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("term without type"))?;
    let lexical = obj
        .get("value")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("term without value"))?;
    match kind {
        "uri" => Iri::new(lexical)
            .map(Term::Iri)
            .map_err(|e| malformed(e.to_string())),
        "bnode" => Iri::new(format!("{}{lexical}", crate::rdf::SKOLEM_PREFIX))
            .map(Term::Iri)
            .map_err(|e| malformed(e.to_string())),
        "literal" | "typed-literal" => {
            let language = obj.get("xml:lang").and_then(Value::as_str);
            let datatype = obj.get("datatype").and_then(Value::as_str);
            match (language, datatype) {
                (Some(tag), _) => Literal::lang_string(lexical, tag)
                    .map(Term::Literal)
                    .map_err(|e| malformed(e.to_string())),
                (None, Some(dt)) => {
                    let dt = Iri::new(dt).map_err(|e| malformed(e.to_string()))?;
                    // endpoints may return ill-typed values; keep them as they are
                    Ok(Term::Literal(Literal::new_unchecked(lexical, dt, None)))
                }
                (None, None) => Ok(Term::Literal(Literal::string(lexical))),
            }
        }
        other => Err(malformed(format!("unknown term type {other:?}"))),
    }
}

/// Parses the SPARQL 1.1 Query Results JSON Format (SELECT form).
pub fn parse_results_json(body: &[u8]) -> Result<SelectResults, ResultsError> {
    let doc: Value = serde_json::from_slice(body).map_err(|e| malformed(e.to_string()))?;
    let head = doc.get("head").ok_or_else(|| malformed("missing head"))?;
    let vars = match head.get("vars") {
        None => Vec::new(),
        Some(v) => v
            .as_array()
            .ok_or_else(|| malformed("head.vars is not an array"))?
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| malformed("variable is not a string")))
            .collect::<Result<_, _>>()?,
    };
    let rows = doc
        .get("results")
        .ok_or_else(|| malformed("missing results"))?
        .get("bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("results.bindings is not an array"))?;
    let mut bindings = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row.as_object().ok_or_else(|| malformed("binding is not an object"))?;
        let mut binding = Binding::new();
        for (var, term) in row {
            binding.insert(var.clone(), parse_term(term)?);
        }
        bindings.push(binding);
    }
    Ok(SelectResults { vars, bindings })
}

/// Reads a single non-negative integer from `?var` in the first row.
pub fn parse_count(results: &SelectResults, var: &str) -> Result<u64, ResultsError> {
    let row = results.bindings.first().ok_or_else(|| malformed("count query returned no rows"))?;
    let term = row.get(var).ok_or_else(|| ResultsError::MissingVariable {
        index: 0,
        variable: var.to_string(),
    })?;
    term.as_literal()
        .and_then(|l| l.lexical().trim_start_matches('+').parse().ok())
        .ok_or_else(|| malformed(format!("?{var} is not a non-negative integer")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintValue {
    pub node_id: NodeId,
    pub constraint_index: usize,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceEdge {
    pub source: Iri,
    pub property_iri: Iri,
    pub target: Iri,
}

/// One match laid out in the shape of the prototype graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultInstance {
    pub node_assignments: BTreeMap<NodeId, Iri>,
    pub constraint_values: Vec<ConstraintValue>,
    pub edges: Vec<InstanceEdge>,
    pub display_labels: BTreeMap<Iri, String>,
}

pub fn assemble_instances(
    graph: &PrototypeGraph,
    variables: &VariableMap,
    bindings: &[Binding],
    labels: &HashMap<Iri, String>,
) -> Result<Vec<ResultInstance>, ResultsError> {
    bindings
        .iter()
        .enumerate()
        .map(|(index, binding)| {
            let lookup = |variable: &str| {
                binding.get(variable).ok_or_else(|| ResultsError::MissingVariable {
                    index,
                    variable: variable.to_string(),
                })
            };
            let mut node_assignments = BTreeMap::new();
            for (&node, variable) in &variables.nodes {
                match lookup(variable)? {
                    Term::Iri(iri) => {
                        node_assignments.insert(node, iri.clone());
                    }
                    Term::Literal(_) => {
                        return Err(ResultsError::UnexpectedTerm {
                            index,
                            variable: variable.clone(),
                            found: "literal",
                        })
                    }
                }
            }
            let mut constraint_values = Vec::with_capacity(variables.constraints.len());
            for c in &variables.constraints {
                match lookup(&c.variable)? {
                    Term::Literal(lit) => constraint_values.push(ConstraintValue {
                        node_id: c.node_id,
                        constraint_index: c.constraint_index,
                        value: lit.clone(),
                    }),
                    Term::Iri(_) => {
                        return Err(ResultsError::UnexpectedTerm {
                            index,
                            variable: c.variable.clone(),
                            found: "IRI",
                        })
                    }
                }
            }
            let edges = graph
                .edges
                .iter()
                .filter_map(|e| {
                    Some(InstanceEdge {
                        source: node_assignments.get(&e.source_node_id)?.clone(),
                        property_iri: e.property_iri.clone(),
                        target: node_assignments.get(&e.target_node_id)?.clone(),
                    })
                })
                .collect();
            let display_labels = node_assignments
                .values()
                .map(|iri| {
                    let label = labels
                        .get(iri)
                        .cloned()
                        .unwrap_or_else(|| iri.local_name().to_string());
                    (iri.clone(), label)
                })
                .collect();
            Ok(ResultInstance {
                node_assignments,
                constraint_values,
                edges,
                display_labels,
            })
        })
        .collect()
}

/// Predicate usage counts. Each entry is written at most once; later writers
/// observe the first stored value.
#[derive(Debug, Default)]
pub struct PrevalenceCache {
    counts: RwLock<HashMap<Iri, u64>>,
}

impl PrevalenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn preloaded(counts: impl IntoIterator<Item = (Iri, u64)>) -> Self {
        PrevalenceCache {
            counts: RwLock::new(counts.into_iter().collect()),
        }
    }

    pub fn get(&self, property: &Iri) -> Option<u64> {
        self.counts.read().unwrap_or_else(|e| e.into_inner()).get(property).copied()
    }

    /// Stores `count` unless a value is already present; returns the stored value.
    pub fn insert_once(&self, property: &Iri, count: u64) -> u64 {
        let mut map = self.counts.write().unwrap_or_else(|e| e.into_inner());
        *map.entry(property.clone()).or_insert(count)
    }

    pub fn len(&self) -> usize {
        self.counts.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proto::{ProtoEdge, ProtoNode};
    use crate::rdf::vocab::xsd;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/{s}")).unwrap()
    }

    #[test]
    fn empty_and_single_documents() {
        let empty = parse_results_json(br#"{"head":{"vars":["v0"]},"results":{"bindings":[]}}"#).unwrap();
        assert!(empty.bindings.is_empty());
        assert_eq!(empty.vars, vec!["v0"]);
        let one = parse_results_json(
            br#"{"head":{"vars":["v0"]},"results":{"bindings":[{"v0":{"type":"uri","value":"http://ex.org/alice"}}]}}"#,
        )
        .unwrap();
        assert_eq!(one.bindings.len(), 1);
        assert_eq!(one.bindings[0]["v0"], Term::Iri(iri("alice")));
    }

    #[test]
    fn literal_terms() {
        let doc = br#"{"head":{"vars":["a","b","c","d"]},"results":{"bindings":[{
            "a":{"type":"literal","value":"x"},
            "b":{"type":"literal","value":"chat","xml:lang":"fr"},
            "c":{"type":"literal","value":"1990-05-01","datatype":"http://www.w3.org/2001/XMLSchema#date"},
            "d":{"type":"bnode","value":"b0"}}]}}"#;
        let r = parse_results_json(doc).unwrap();
        let row = &r.bindings[0];
        assert_eq!(row["a"], Term::Literal(Literal::string("x")));
        assert_eq!(row["b"], Term::Literal(Literal::lang_string("chat", "fr").unwrap()));
        assert_eq!(row["c"], Term::Literal(Literal::new("1990-05-01", xsd::date()).unwrap()));
        assert_eq!(row["d"].as_iri().unwrap().as_str(), "urn:bnode:b0");
    }

    #[test]
    fn malformed_documents() {
        for doc in [
            &br#"{"results":{"bindings":[]}}"#[..],
            br#"{"head":{"vars":[]}}"#,
            br#"{"head":{},"results":{"bindings":[{"v":{"type":"weird","value":"x"}}]}}"#,
            br#"{"head":{},"results":{"bindings":[{"v":{"type":"uri"}}]}}"#,
            b"not json",
        ] {
            assert!(matches!(
                parse_results_json(doc),
                Err(ResultsError::MalformedResults(_))
            ));
        }
    }

    #[test]
    fn counts() {
        let doc = br#"{"head":{"vars":["c"]},"results":{"bindings":[{"c":{"type":"literal","value":"3","datatype":"http://www.w3.org/2001/XMLSchema#integer"}}]}}"#;
        assert_eq!(parse_count(&parse_results_json(doc).unwrap(), "c"), Ok(3));
    }

    fn author_graph() -> PrototypeGraph {
        PrototypeGraph {
            nodes: vec![
                ProtoNode {
                    node_id: 0,
                    class_iri: iri("Person"),
                    constraints: vec![],
                },
                ProtoNode {
                    node_id: 1,
                    class_iri: iri("Work"),
                    constraints: vec![],
                },
            ],
            edges: vec![ProtoEdge {
                source_node_id: 0,
                target_node_id: 1,
                property_iri: iri("author"),
            }],
            root_node_id: 0,
        }
    }

    #[test]
    fn assembly() {
        let g = author_graph();
        let vars = VariableMap::for_graph(&g);
        assert!(assemble_instances(&g, &vars, &[], &HashMap::new()).unwrap().is_empty());
        let binding: Binding = [
            ("v0".to_string(), Term::Iri(iri("alice"))),
            ("v1".to_string(), Term::Iri(iri("book1"))),
        ]
        .into_iter()
        .collect();
        let labels = HashMap::from([(iri("alice"), "Alice".to_string())]);
        let inst = assemble_instances(&g, &vars, &[binding.clone()], &labels).unwrap();
        assert_eq!(
            inst[0].edges,
            vec![InstanceEdge {
                source: iri("alice"),
                property_iri: iri("author"),
                target: iri("book1"),
            }]
        );
        assert_eq!(inst[0].display_labels[&iri("alice")], "Alice");
        assert_eq!(inst[0].display_labels[&iri("book1")], "book1");
        let mut partial = binding;
        partial.remove("v1");
        assert!(matches!(
            assemble_instances(&g, &vars, &[partial], &labels),
            Err(ResultsError::MissingVariable { .. })
        ));
    }

    #[test]
    fn cache_is_write_once() {
        let cache = PrevalenceCache::new();
        assert_eq!(cache.get(&iri("p")), None);
        assert_eq!(cache.insert_once(&iri("p"), 3), 3);
        assert_eq!(cache.insert_once(&iri("p"), 9), 3);
        assert_eq!(cache.get(&iri("p")), Some(3));
        let shared = std::sync::Arc::new(PrevalenceCache::new());
        let handles: Vec<_> = (0..8u64)
            .map(|i| {
                let c = shared.clone();
                std::thread::spawn(move || c.insert_once(&iri("q"), i))
            })
            .collect();
        let seen: Vec<u64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        let winner = shared.get(&iri("q")).unwrap();
        assert!(seen.iter().all(|&v| v == winner));
    }
}

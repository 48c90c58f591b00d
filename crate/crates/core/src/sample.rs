//! Random valid prototype graphs over an ontology and instance store, for
//! differential tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::ontology::{OntologyModel, PropertyDef, PropertyKind};
use crate::proto::{new_graph, single_node, Constraint, NodeId, Operator, PrototypeGraph};
use crate::rdf::vocab::xsd;
use crate::rdf::{DatatypeCategory, Iri, Literal, Term};
use crate::store::InstanceStore;

#[derive(Debug, Clone, Copy)]
pub struct SampleLimits {
    pub max_nodes: usize,
    pub max_constraints: usize,
}

impl Default for SampleLimits {
    fn default() -> Self {
        SampleLimits {
            max_nodes: 4,
            max_constraints: 2,
        }
    }
}

fn admissible<'a>(
    ontology: &'a OntologyModel,
    class: &'a Iri,
    kind: PropertyKind,
) -> impl Iterator<Item = &'a PropertyDef> + 'a {
    ontology.properties().filter(move |p| {
        p.kind == kind && p.domain.as_ref().is_none_or(|d| ontology.is_subclass_of(class, d))
    })
}

fn target_class<R: Rng>(ontology: &OntologyModel, prop: &PropertyDef, rng: &mut R) -> Iri {
    let Some(range) = &prop.range else {
        return crate::rdf::vocab::owl::thing();
    };
    let below: Vec<Iri> = ontology.descendants_or_self(range).into_iter().collect();
    if rng.random_bool(0.3) {
        below.choose(rng).cloned().unwrap_or_else(|| range.clone())
    } else {
        range.clone()
    }
}

fn operand<R: Rng>(store: &InstanceStore, prop: &PropertyDef, rng: &mut R) -> Option<(Operator, Literal)> {
    let seen: Vec<&Literal> = store
        .with_predicate(&prop.iri)
        .filter_map(|t| match &t.object {
            Term::Literal(l) => Some(l),
            _ => None,
        })
        .collect();
    let existing = seen.choose(rng).copied().cloned();
    let datatype = prop.range.clone().unwrap_or_else(xsd::string);
    let synthetic = match DatatypeCategory::of(datatype.as_str()) {
        DatatypeCategory::Integer => Literal::new(rng.random_range(-5..5000).to_string(), xsd::integer()).ok(),
        DatatypeCategory::Decimal => Literal::new(format!("{}.5", rng.random_range(0..300)), xsd::decimal()).ok(),
        DatatypeCategory::Double => {
            Literal::new(format!("{:.2}", rng.random_range(1.4..2.2)), xsd::double()).ok()
        }
        DatatypeCategory::Date => Literal::new(
            format!("{}-{:02}-{:02}", rng.random_range(1950..2010), rng.random_range(1..13), rng.random_range(1..29)),
            xsd::date(),
        )
        .ok(),
        _ => Some(Literal::string(["a", "er", "1", "Port", "zz"].choose(rng).copied().unwrap_or("a"))),
    };
    let value = if rng.random_bool(0.7) { existing.or(synthetic) } else { synthetic.or(existing) }?;
    let category = value.category();
    let op = if category.is_numeric() || category.is_temporal() {
        *Operator::ALL[..6].choose(rng)?
    } else if category == DatatypeCategory::String {
        *[Operator::Eq, Operator::Ne, Operator::Contains].choose(rng)?
    } else {
        *[Operator::Eq, Operator::Ne].choose(rng)?
    };
    let value = if op == Operator::Contains {
        let chars: Vec<char> = value.lexical().chars().collect();
        let start = rng.random_range(0..=chars.len().saturating_sub(1));
        let len = rng.random_range(0..=3.min(chars.len() - start.min(chars.len())));
        Literal::string(chars[start..start + len].iter().collect::<String>())
    } else {
        value
    };
    Some((op, value))
}

/// A graph passing `validate_graph`, grown through the editing operations.
pub fn random_graph<R: Rng>(
    ontology: &OntologyModel,
    store: &InstanceStore,
    limits: SampleLimits,
    rng: &mut R,
) -> PrototypeGraph {
    let objects: Vec<&PropertyDef> = ontology
        .properties()
        .filter(|p| p.kind == PropertyKind::Object)
        .collect();
    let classes: Vec<&Iri> = ontology.classes().map(|c| &c.iri).collect();
    let mut graph = match objects.choose(rng) {
        Some(p) if limits.max_nodes >= 2 && rng.random_bool(0.85) => {
            new_graph(&p.iri, ontology).expect("declared property")
        }
        _ => single_node((*classes.choose(rng).expect("non-empty ontology")).clone()),
    };
    let nodes = rng.random_range(graph.nodes.len()..=limits.max_nodes.max(graph.nodes.len()));
    let mut attempts = 0;
    while graph.nodes.len() < nodes && attempts < 20 {
        attempts += 1;
        let source: NodeId = rng.random_range(0..graph.nodes.len());
        let class = graph.nodes[source].class_iri.clone();
        let candidates: Vec<&PropertyDef> = admissible(ontology, &class, PropertyKind::Object).collect();
        let Some(prop) = candidates.choose(rng) else { continue };
        let target = target_class(ontology, prop, rng);
        if let Ok(next) = graph.add_edge(source, &prop.iri, &target, ontology) {
            graph = next;
        }
    }
    let constraints = rng.random_range(0..=limits.max_constraints);
    attempts = 0;
    while graph.constraint_count() < constraints && attempts < 20 {
        attempts += 1;
        let node: NodeId = rng.random_range(0..graph.nodes.len());
        let class = graph.nodes[node].class_iri.clone();
        let candidates: Vec<&PropertyDef> = admissible(ontology, &class, PropertyKind::Datatype).collect();
        let Some(prop) = candidates.choose(rng) else { continue };
        let Some((operator, operand)) = operand(store, prop, rng) else { continue };
        let constraint = Constraint {
            property_iri: prop.iri.clone(),
            operator,
            operand,
        };
        if let Ok(next) = graph.add_constraint(node, constraint, ontology) {
            graph = next;
        }
    }
    graph
}

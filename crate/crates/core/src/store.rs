//! In-memory instance store and the naive prototype-graph matcher that serves
//! as the reference semantics for generated queries.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::exec::Exec;
use crate::ontology::OntologyModel;
use crate::proto::{validate_graph, Diagnostic, NodeId, PrototypeGraph};
use crate::rdf::vocab::rdf;
use crate::rdf::{Iri, Literal, Term, Triple};
use crate::results::Binding;
use crate::sparql::{compare_literal, constraint_var, node_var, TypeMode};

#[derive(Debug, Clone, Default)]
pub struct InstanceStore {
    triples: Vec<Triple>,
    by_predicate: HashMap<Iri, Vec<usize>>,
    by_subject_predicate: HashMap<(Iri, Iri), Vec<usize>>,
    by_type: HashMap<Iri, BTreeSet<Iri>>,
}

impl InstanceStore {
    pub fn new(triples: Vec<Triple>) -> Self {
        let mut by_predicate: HashMap<Iri, Vec<usize>> = HashMap::new();
        let mut by_subject_predicate: HashMap<(Iri, Iri), Vec<usize>> = HashMap::new();
        let mut by_type: HashMap<Iri, BTreeSet<Iri>> = HashMap::new();
        let type_iri = rdf::type_();
        for (i, t) in triples.iter().enumerate() {
            by_predicate.entry(t.predicate.clone()).or_default().push(i);
            by_subject_predicate
                .entry((t.subject.clone(), t.predicate.clone()))
                .or_default()
                .push(i);
            if t.predicate == type_iri {
                if let Term::Iri(class) = &t.object {
                    by_type.entry(class.clone()).or_default().insert(t.subject.clone());
                }
            }
        }
        InstanceStore {
            triples,
            by_predicate,
            by_subject_predicate,
            by_type,
        }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn with_predicate<'a>(&'a self, predicate: &Iri) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_predicate
            .get(predicate)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn objects<'a>(&'a self, subject: &Iri, predicate: &Iri) -> impl Iterator<Item = &'a Term> + 'a {
        self.by_subject_predicate
            .get(&(subject.clone(), predicate.clone()))
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i].object)
    }

    /// Number of triples using `predicate`.
    pub fn prevalence(&self, predicate: &Iri) -> u64 {
        self.by_predicate.get(predicate).map_or(0, |v| v.len() as u64)
    }

    /// Subjects with an explicit type triple for `class`.
    pub fn direct_instances(&self, class: &Iri) -> impl Iterator<Item = &Iri> {
        self.by_type.get(class).into_iter().flatten()
    }

    pub fn has_type(&self, subject: &Iri, class: &Iri) -> bool {
        self.by_type.get(class).is_some_and(|s| s.contains(subject))
    }

    /// First `rdfs:label` value per subject, preferring untagged literals.
    pub fn label_of(&self, subject: &Iri) -> Option<&str> {
        let label = crate::rdf::vocab::rdfs::label();
        let mut best: Option<&Literal> = None;
        for term in self.objects(subject, &label) {
            if let Term::Literal(lit) = term {
                let better = match best {
                    None => true,
                    Some(b) => (lit.language().is_some(), lit.lexical()) < (b.language().is_some(), b.lexical()),
                };
                if better {
                    best = Some(lit);
                }
            }
        }
        best.map(Literal::lexical)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatchError {
    #[error("graph is invalid ({} diagnostics)", .0.len())]
    InvalidGraph(Vec<Diagnostic>),
}

struct Plan<'a> {
    graph: &'a PrototypeGraph,
    order: Vec<NodeId>,
    /// For each non-root node in `order`: (edge index, node is edge target).
    via: HashMap<NodeId, (usize, bool)>,
    /// Accepted classes per node; `None` means unconstrained.
    classes: Vec<Option<HashSet<Iri>>>,
}

/// Every distinct assignment of node and constraint variables satisfying the
/// graph, sorted. Type checks follow `mode`; constraint filters follow
/// [`compare_literal`], with comparison errors counting as false.
pub fn match_bgp(
    store: &InstanceStore,
    ontology: &OntologyModel,
    graph: &PrototypeGraph,
    mode: TypeMode,
    exec: Exec,
) -> Result<Vec<Binding>, MatchError> {
    let diagnostics = validate_graph(graph, ontology);
    if !diagnostics.is_empty() {
        return Err(MatchError::InvalidGraph(diagnostics));
    }
    let order = graph.bfs_order();
    let mut via = HashMap::new();
    let mut placed = HashSet::from([graph.root_node_id]);
    for &n in &order[1..] {
        let (i, e) = graph
            .edges
            .iter()
            .enumerate()
            .find(|(_, e)| {
                (e.target_node_id == n && placed.contains(&e.source_node_id))
                    || (e.source_node_id == n && placed.contains(&e.target_node_id))
            })
            .expect("bfs order follows tree edges");
        via.insert(n, (i, e.target_node_id == n));
        placed.insert(n);
    }
    let classes = graph
        .nodes
        .iter()
        .map(|node| {
            if OntologyModel::is_top(&node.class_iri) {
                None
            } else {
                Some(match mode {
                    TypeMode::Exact => HashSet::from([node.class_iri.clone()]),
                    TypeMode::SubclassClosure => ontology.descendants_or_self(&node.class_iri).into_iter().collect(),
                })
            }
        })
        .collect();
    let plan = Plan {
        graph,
        order,
        via,
        classes,
    };

    let roots = root_candidates(store, &plan);
    let found: Vec<Binding> = exec.flat_map(&roots, |root| {
        let mut out = Vec::new();
        let mut assignment: Vec<Option<Term>> = vec![None; graph.nodes.len()];
        if type_ok(store, &plan, graph.root_node_id, root) {
            assignment[graph.root_node_id] = Some(root.clone());
            extend(store, &plan, 1, &mut assignment, &mut out);
        }
        out
    });
    let distinct: BTreeSet<Binding> = found.into_iter().collect();
    Ok(distinct.into_iter().collect())
}

fn root_candidates(store: &InstanceStore, plan: &Plan<'_>) -> Vec<Term> {
    let root = plan.graph.root_node_id;
    let set: BTreeSet<Term> = match &plan.classes[root] {
        Some(classes) => classes
            .iter()
            .flat_map(|c| store.direct_instances(c))
            .map(|s| Term::Iri(s.clone()))
            .collect(),
        // untyped root: anything that can occupy the positions it is used in
        None => store
            .triples()
            .iter()
            .flat_map(|t| [Term::Iri(t.subject.clone()), t.object.clone()])
            .collect(),
    };
    set.into_iter().collect()
}

fn type_ok(store: &InstanceStore, plan: &Plan<'_>, node: NodeId, value: &Term) -> bool {
    match &plan.classes[node] {
        None => true,
        Some(classes) => match value {
            Term::Iri(iri) => classes.iter().any(|c| store.has_type(iri, c)),
            Term::Literal(_) => false,
        },
    }
}

fn extend(
    store: &InstanceStore,
    plan: &Plan<'_>,
    depth: usize,
    assignment: &mut Vec<Option<Term>>,
    out: &mut Vec<Binding>,
) {
    if depth == plan.order.len() {
        expand_constraints(store, plan, assignment, out);
        return;
    }
    let node = plan.order[depth];
    let (edge_index, node_is_target) = plan.via[&node];
    let edge = &plan.graph.edges[edge_index];
    let candidates: Vec<Term> = if node_is_target {
        match &assignment[edge.source_node_id] {
            Some(Term::Iri(s)) => store.objects(s, &edge.property_iri).cloned().collect(),
            _ => Vec::new(),
        }
    } else {
        let target = assignment[edge.target_node_id].as_ref().expect("parent assigned");
        store
            .with_predicate(&edge.property_iri)
            .filter(|t| &t.object == target)
            .map(|t| Term::Iri(t.subject.clone()))
            .collect()
    };
    for value in candidates {
        if type_ok(store, plan, node, &value) {
            assignment[node] = Some(value);
            extend(store, plan, depth + 1, assignment, out);
        }
    }
    assignment[node] = None;
}

fn expand_constraints(store: &InstanceStore, plan: &Plan<'_>, assignment: &[Option<Term>], out: &mut Vec<Binding>) {
    let mut base = Binding::new();
    for (id, value) in assignment.iter().enumerate() {
        base.insert(node_var(id), value.clone().expect("all nodes assigned"));
    }
    let mut partial = vec![base];
    for node in &plan.graph.nodes {
        let Some(Term::Iri(subject)) = &assignment[node.node_id] else {
            if !node.constraints.is_empty() {
                return;
            }
            continue;
        };
        for (index, c) in node.constraints.iter().enumerate() {
            let values: Vec<&Term> = store
                .objects(subject, &c.property_iri)
                .filter(|v| match v {
                    Term::Literal(lit) => compare_literal(lit, c.operator, &c.operand).unwrap_or(false),
                    Term::Iri(_) => false,
                })
                .collect();
            let var = constraint_var(node.node_id, index);
            partial = partial
                .into_iter()
                .flat_map(|b| {
                    let var = &var;
                    values.iter().map(move |&v| {
                        let mut next = b.clone();
                        next.insert(var.clone(), v.clone());
                        next
                    })
                })
                .collect();
            if partial.is_empty() {
                return;
            }
        }
    }
    out.extend(partial);
}

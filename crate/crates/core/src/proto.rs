//! Prototype graphs: the tree-shaped query object users build and edit.
//!
//! Graphs are immutable values. Every edit returns a fresh graph or an error,
//! and every graph produced by the edit operations passes [`validate_graph`].

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ontology::{OntologyModel, PropertyKind};
use crate::rdf::vocab::{owl, rdfs};
use crate::rdf::{DatatypeCategory, Iri, Literal};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=", alias = "≠")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
    #[serde(rename = "contains")]
    Contains,
}

impl Operator {
    pub const ALL: [Operator; 7] = [
        Operator::Eq,
        Operator::Ne,
        Operator::Lt,
        Operator::Le,
        Operator::Gt,
        Operator::Ge,
        Operator::Contains,
    ];

    pub fn is_ordering(self) -> bool {
        matches!(self, Operator::Lt | Operator::Le | Operator::Gt | Operator::Ge)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Operator::Eq => "=",
            Operator::Ne => "!=",
            Operator::Lt => "<",
            Operator::Le => "<=",
            Operator::Gt => ">",
            Operator::Ge => ">=",
            Operator::Contains => "contains",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Constraint {
    pub property_iri: Iri,
    pub operator: Operator,
    pub operand: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProtoNode {
    pub node_id: NodeId,
    pub class_iri: Iri,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProtoEdge {
    pub source_node_id: NodeId,
    pub target_node_id: NodeId,
    pub property_iri: Iri,
}

/// Canonical JSON: `nodes` ordered by `nodeId`, `edges` in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PrototypeGraph {
    pub nodes: Vec<ProtoNode>,
    pub edges: Vec<ProtoEdge>,
    pub root_node_id: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum GraphElement {
    #[serde(rename_all = "camelCase")]
    Node { node_id: NodeId },
    #[serde(rename_all = "camelCase")]
    Edge { edge_index: usize },
    #[serde(rename_all = "camelCase")]
    Constraint { node_id: NodeId, constraint_index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown property <{property}>: {reason}")]
    UnknownProperty { property: Iri, reason: &'static str },
    #[error("unknown class <{class}>")]
    UnknownClass { class: Iri },
    #[error("unknown node {node_id}")]
    UnknownNode { node_id: NodeId },
    #[error("class <{class}> is outside the domain <{domain}> of <{property}>")]
    DomainViolation { property: Iri, class: Iri, domain: Iri },
    #[error("class <{class}> is outside the range <{range}> of <{property}>")]
    RangeViolation { property: Iri, class: Iri, range: Iri },
    #[error("operator {operator} cannot be applied to <{datatype}> for <{property}>")]
    OperatorDatatypeMismatch {
        property: Iri,
        operator: Operator,
        datatype: Iri,
    },
    #[error("node {node_id} already has this constraint on <{property}>")]
    DuplicateConstraint { node_id: NodeId, property: Iri },
    #[error("removing node {node_id} would disconnect the graph")]
    WouldDisconnect { node_id: NodeId },
    #[error("the root node cannot be removed")]
    RootRemoval,
    #[error("removal would leave a single unconstrained top-class node")]
    UnboundNode,
    #[error("no such element {0:?}")]
    UnknownElement(GraphElement),
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::UnknownProperty { .. } => "UnknownProperty",
            GraphError::UnknownClass { .. } => "UnknownClass",
            GraphError::UnknownNode { .. } => "UnknownNode",
            GraphError::DomainViolation { .. } => "DomainViolation",
            GraphError::RangeViolation { .. } => "RangeViolation",
            GraphError::OperatorDatatypeMismatch { .. } => "OperatorDatatypeMismatch",
            GraphError::DuplicateConstraint { .. } => "DuplicateConstraint",
            GraphError::WouldDisconnect { .. } => "WouldDisconnect",
            GraphError::RootRemoval => "RootRemoval",
            GraphError::UnboundNode => "UnboundNode",
            GraphError::UnknownElement(_) => "UnknownElement",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticCode {
    NotATree,
    MissingRoot,
    InvalidNodeIds,
    UnknownNode,
    SelfLoop,
    UnknownClass,
    UnknownProperty,
    DomainViolation,
    RangeViolation,
    OperatorDatatypeMismatch,
    DuplicateConstraint,
    UnboundNode,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::NotATree => "NotATree",
            DiagnosticCode::MissingRoot => "MissingRoot",
            DiagnosticCode::InvalidNodeIds => "InvalidNodeIds",
            DiagnosticCode::UnknownNode => "UnknownNode",
            DiagnosticCode::SelfLoop => "SelfLoop",
            DiagnosticCode::UnknownClass => "UnknownClass",
            DiagnosticCode::UnknownProperty => "UnknownProperty",
            DiagnosticCode::DomainViolation => "DomainViolation",
            DiagnosticCode::RangeViolation => "RangeViolation",
            DiagnosticCode::OperatorDatatypeMismatch => "OperatorDatatypeMismatch",
            DiagnosticCode::DuplicateConstraint => "DuplicateConstraint",
            DiagnosticCode::UnboundNode => "UnboundNode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ElementRef {
    Graph,
    #[serde(rename_all = "camelCase")]
    Node { node_id: NodeId },
    #[serde(rename_all = "camelCase")]
    Edge { edge_index: usize },
    #[serde(rename_all = "camelCase")]
    Constraint { node_id: NodeId, constraint_index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub element: ElementRef,
    pub message: String,
}

fn top() -> Iri {
    owl::thing()
}

/// Seeds a graph from a start link: domain node (root) -> range node.
pub fn new_graph(start_link: &Iri, ontology: &OntologyModel) -> Result<PrototypeGraph, GraphError> {
    let prop = ontology.property(start_link).ok_or_else(|| GraphError::UnknownProperty {
        property: start_link.clone(),
        reason: "not declared in the ontology",
    })?;
    if prop.kind != PropertyKind::Object {
        return Err(GraphError::UnknownProperty {
            property: start_link.clone(),
            reason: "a start link must be an object property",
        });
    }
    let domain = prop.domain.clone().unwrap_or_else(top);
    let range = prop.range.clone().unwrap_or_else(top);
    Ok(PrototypeGraph {
        nodes: vec![
            ProtoNode {
                node_id: 0,
                class_iri: domain,
                constraints: Vec::new(),
            },
            ProtoNode {
                node_id: 1,
                class_iri: range,
                constraints: Vec::new(),
            },
        ],
        edges: vec![ProtoEdge {
            source_node_id: 0,
            target_node_id: 1,
            property_iri: start_link.clone(),
        }],
        root_node_id: 0,
    })
}

/// A single node graph; mostly useful for tests and trivial queries.
pub fn single_node(class: Iri) -> PrototypeGraph {
    PrototypeGraph {
        nodes: vec![ProtoNode {
            node_id: 0,
            class_iri: class,
            constraints: Vec::new(),
        }],
        edges: Vec::new(),
        root_node_id: 0,
    }
}

fn check_edge(
    ontology: &OntologyModel,
    source_class: &Iri,
    property: &Iri,
    target_class: &Iri,
) -> Result<(), GraphError> {
    let prop = ontology.property(property).ok_or_else(|| GraphError::UnknownProperty {
        property: property.clone(),
        reason: "not declared in the ontology",
    })?;
    if prop.kind != PropertyKind::Object {
        return Err(GraphError::UnknownProperty {
            property: property.clone(),
            reason: "edges need an object property",
        });
    }
    if let Some(domain) = &prop.domain {
        if !ontology.is_subclass_of(source_class, domain) {
            return Err(GraphError::DomainViolation {
                property: property.clone(),
                class: source_class.clone(),
                domain: domain.clone(),
            });
        }
    }
    if let Some(range) = &prop.range {
        if !ontology.is_subclass_of(target_class, range) {
            return Err(GraphError::RangeViolation {
                property: property.clone(),
                class: target_class.clone(),
                range: range.clone(),
            });
        }
    }
    Ok(())
}

fn categories_compatible(range: DatatypeCategory, operand: DatatypeCategory) -> bool {
    use DatatypeCategory::*;
    match (range, operand) {
        (a, b) if a == b => true,
        (a, b) if a.is_numeric() && b.is_numeric() => true,
        (String, LangString) | (LangString, String) => true,
        (Other, _) => true,
        _ => false,
    }
}

fn check_constraint(ontology: &OntologyModel, class: &Iri, constraint: &Constraint) -> Result<(), GraphError> {
    let property = &constraint.property_iri;
    let prop = ontology.property(property).ok_or_else(|| GraphError::UnknownProperty {
        property: property.clone(),
        reason: "not declared in the ontology",
    })?;
    if prop.kind != PropertyKind::Datatype {
        return Err(GraphError::UnknownProperty {
            property: property.clone(),
            reason: "constraints need a datatype property",
        });
    }
    if let Some(domain) = &prop.domain {
        if !ontology.is_subclass_of(class, domain) {
            return Err(GraphError::DomainViolation {
                property: property.clone(),
                class: class.clone(),
                domain: domain.clone(),
            });
        }
    }
    let operand = constraint.operand.category();
    let mismatch = || GraphError::OperatorDatatypeMismatch {
        property: property.clone(),
        operator: constraint.operator,
        datatype: constraint.operand.datatype().clone(),
    };
    let operator_ok = match constraint.operator {
        Operator::Contains => operand == DatatypeCategory::String,
        op if op.is_ordering() => operand.is_numeric() || operand.is_temporal(),
        _ => true,
    };
    if !operator_ok {
        return Err(mismatch());
    }
    if let Some(range) = &prop.range {
        if range.as_str() != rdfs::LITERAL && !categories_compatible(DatatypeCategory::of(range.as_str()), operand) {
            return Err(mismatch());
        }
    }
    Ok(())
}

impl PrototypeGraph {
    pub fn node(&self, id: NodeId) -> Option<&ProtoNode> {
        self.nodes.get(id).filter(|n| n.node_id == id)
    }

    /// Adds `source -[property]-> new node of target_class`.
    pub fn add_edge(
        &self,
        source: NodeId,
        property: &Iri,
        target_class: &Iri,
        ontology: &OntologyModel,
    ) -> Result<PrototypeGraph, GraphError> {
        let source_node = self.node(source).ok_or(GraphError::UnknownNode { node_id: source })?;
        if !ontology.is_class(target_class) {
            return Err(GraphError::UnknownClass {
                class: target_class.clone(),
            });
        }
        check_edge(ontology, &source_node.class_iri, property, target_class)?;
        let mut next = self.clone();
        let id = next.nodes.len();
        next.nodes.push(ProtoNode {
            node_id: id,
            class_iri: target_class.clone(),
            constraints: Vec::new(),
        });
        next.edges.push(ProtoEdge {
            source_node_id: source,
            target_node_id: id,
            property_iri: property.clone(),
        });
        Ok(next)
    }

    pub fn add_constraint(
        &self,
        node_id: NodeId,
        constraint: Constraint,
        ontology: &OntologyModel,
    ) -> Result<PrototypeGraph, GraphError> {
        let node = self.node(node_id).ok_or(GraphError::UnknownNode { node_id })?;
        check_constraint(ontology, &node.class_iri, &constraint)?;
        if node.constraints.contains(&constraint) {
            return Err(GraphError::DuplicateConstraint {
                node_id,
                property: constraint.property_iri,
            });
        }
        let mut next = self.clone();
        next.nodes[node_id].constraints.push(constraint);
        Ok(next)
    }

    pub fn remove_element(&self, element: GraphElement) -> Result<PrototypeGraph, GraphError> {
        match element {
            GraphElement::Constraint {
                node_id,
                constraint_index,
            } => {
                let node = self.node(node_id).ok_or(GraphError::UnknownElement(element))?;
                if constraint_index >= node.constraints.len() {
                    return Err(GraphError::UnknownElement(element));
                }
                let mut next = self.clone();
                next.nodes[node_id].constraints.remove(constraint_index);
                if next.is_unbound_single_node() {
                    return Err(GraphError::UnboundNode);
                }
                Ok(next)
            }
            GraphElement::Node { node_id } => {
                if self.node(node_id).is_none() {
                    return Err(GraphError::UnknownElement(element));
                }
                self.remove_leaf(node_id)
            }
            GraphElement::Edge { edge_index } => {
                let edge = self.edges.get(edge_index).ok_or(GraphError::UnknownElement(element))?;
                // an edge goes together with its leaf endpoint
                let leaf = [edge.target_node_id, edge.source_node_id]
                    .into_iter()
                    .find(|&n| n != self.root_node_id && self.degree(n) == 1);
                match leaf {
                    Some(n) => self.remove_leaf(n),
                    None => Err(GraphError::WouldDisconnect {
                        node_id: edge.target_node_id,
                    }),
                }
            }
        }
    }

    fn degree(&self, id: NodeId) -> usize {
        self.edges
            .iter()
            .filter(|e| e.source_node_id == id || e.target_node_id == id)
            .count()
    }

    fn is_unbound_single_node(&self) -> bool {
        self.nodes.len() == 1
            && OntologyModel::is_top(&self.nodes[0].class_iri)
            && self.nodes[0].constraints.is_empty()
    }

    fn remove_leaf(&self, node_id: NodeId) -> Result<PrototypeGraph, GraphError> {
        if node_id == self.root_node_id {
            return Err(GraphError::RootRemoval);
        }
        if self.degree(node_id) > 1 {
            return Err(GraphError::WouldDisconnect { node_id });
        }
        let renumber = |id: NodeId| if id > node_id { id - 1 } else { id };
        let nodes = self
            .nodes
            .iter()
            .filter(|n| n.node_id != node_id)
            .map(|n| ProtoNode {
                node_id: renumber(n.node_id),
                ..n.clone()
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| e.source_node_id != node_id && e.target_node_id != node_id)
            .map(|e| ProtoEdge {
                source_node_id: renumber(e.source_node_id),
                target_node_id: renumber(e.target_node_id),
                property_iri: e.property_iri.clone(),
            })
            .collect();
        let next = PrototypeGraph {
            nodes,
            edges,
            root_node_id: renumber(self.root_node_id),
        };
        if next.is_unbound_single_node() {
            return Err(GraphError::UnboundNode);
        }
        Ok(next)
    }

    /// Node ids in breadth-first order from the root; neighbours are visited
    /// in edge insertion order. Only meaningful for valid trees; unreachable
    /// nodes are omitted.
    pub fn bfs_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([self.root_node_id]);
        seen.insert(self.root_node_id);
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for e in &self.edges {
                let other = if e.source_node_id == n {
                    e.target_node_id
                } else if e.target_node_id == n {
                    e.source_node_id
                } else {
                    continue;
                };
                if seen.insert(other) {
                    queue.push_back(other);
                }
            }
        }
        order
    }

    /// Distinct node classes, sorted.
    pub fn classes(&self) -> Vec<Iri> {
        let set: std::collections::BTreeSet<Iri> = self.nodes.iter().map(|n| n.class_iri.clone()).collect();
        set.into_iter().collect()
    }

    pub fn constraint_count(&self) -> usize {
        self.nodes.iter().map(|n| n.constraints.len()).sum()
    }
}

/// Full structural and ontological check; an empty list means valid.
pub fn validate_graph(graph: &PrototypeGraph, ontology: &OntologyModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |code: DiagnosticCode, element: ElementRef, message: String| {
        out.push(Diagnostic { code, element, message });
    };
    let n = graph.nodes.len();

    if n == 0 || graph.root_node_id >= n {
        push(
            DiagnosticCode::MissingRoot,
            ElementRef::Graph,
            format!("root node {} does not exist", graph.root_node_id),
        );
    }
    let ids_dense = graph.nodes.iter().enumerate().all(|(i, node)| node.node_id == i);
    if !ids_dense {
        push(
            DiagnosticCode::InvalidNodeIds,
            ElementRef::Graph,
            "node ids must be 0..n-1 in order".into(),
        );
    }

    let mut endpoints_ok = true;
    for (i, e) in graph.edges.iter().enumerate() {
        for id in [e.source_node_id, e.target_node_id] {
            if id >= n {
                endpoints_ok = false;
                push(
                    DiagnosticCode::UnknownNode,
                    ElementRef::Edge { edge_index: i },
                    format!("edge {i} references missing node {id}"),
                );
            }
        }
        if e.source_node_id == e.target_node_id {
            endpoints_ok = false;
            push(
                DiagnosticCode::SelfLoop,
                ElementRef::Edge { edge_index: i },
                format!("edge {i} connects node {} to itself", e.source_node_id),
            );
        }
    }

    if n > 0 && graph.root_node_id < n && ids_dense && endpoints_ok {
        let reached = graph.bfs_order().len();
        if graph.edges.len() + 1 != n || reached != n {
            push(
                DiagnosticCode::NotATree,
                ElementRef::Graph,
                format!(
                    "{} nodes and {} edges with {} reachable from the root; the graph must be a tree",
                    n,
                    graph.edges.len(),
                    reached
                ),
            );
        }
    }

    for node in &graph.nodes {
        if !ontology.is_class(&node.class_iri) {
            push(
                DiagnosticCode::UnknownClass,
                ElementRef::Node { node_id: node.node_id },
                format!("class <{}> is not in the ontology", node.class_iri),
            );
            continue;
        }
        let mut seen = Vec::new();
        for (ci, c) in node.constraints.iter().enumerate() {
            let element = ElementRef::Constraint {
                node_id: node.node_id,
                constraint_index: ci,
            };
            if let Err(err) = check_constraint(ontology, &node.class_iri, c) {
                push(diagnostic_code(&err), element, err.to_string());
            }
            if seen.contains(&c) {
                push(
                    DiagnosticCode::DuplicateConstraint,
                    element,
                    format!("constraint {ci} repeats an earlier constraint"),
                );
            }
            seen.push(c);
        }
    }

    let class_of: BTreeMap<NodeId, &Iri> = graph.nodes.iter().map(|n| (n.node_id, &n.class_iri)).collect();
    for (i, e) in graph.edges.iter().enumerate() {
        let (Some(s), Some(t)) = (class_of.get(&e.source_node_id), class_of.get(&e.target_node_id)) else {
            continue;
        };
        if !ontology.is_class(s) || !ontology.is_class(t) {
            continue;
        }
        if let Err(err) = check_edge(ontology, s, &e.property_iri, t) {
            push(diagnostic_code(&err), ElementRef::Edge { edge_index: i }, err.to_string());
        }
    }

    if graph.is_unbound_single_node() {
        push(
            DiagnosticCode::UnboundNode,
            ElementRef::Node { node_id: 0 },
            "a lone top-class node without constraints matches nothing specific".into(),
        );
    }
    out
}

fn diagnostic_code(err: &GraphError) -> DiagnosticCode {
    match err {
        GraphError::UnknownProperty { .. } => DiagnosticCode::UnknownProperty,
        GraphError::UnknownClass { .. } => DiagnosticCode::UnknownClass,
        GraphError::UnknownNode { .. } => DiagnosticCode::UnknownNode,
        GraphError::DomainViolation { .. } => DiagnosticCode::DomainViolation,
        GraphError::RangeViolation { .. } => DiagnosticCode::RangeViolation,
        GraphError::OperatorDatatypeMismatch { .. } => DiagnosticCode::OperatorDatatypeMismatch,
        GraphError::DuplicateConstraint { .. } => DiagnosticCode::DuplicateConstraint,
        GraphError::UnboundNode => DiagnosticCode::UnboundNode,
        GraphError::WouldDisconnect { .. } | GraphError::RootRemoval | GraphError::UnknownElement(_) => {
            DiagnosticCode::NotATree
        }
    }
}

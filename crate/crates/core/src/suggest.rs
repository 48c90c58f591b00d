//! Guidance: start links from topics, and semantic search over the links and
//! constraint properties admissible for a class.

use serde::{Deserialize, Serialize};

use crate::embed::{top_k_by, DocumentKind, EmbedError, Embedder, EmbeddingVector, VectorIndex};
use crate::exec::Exec;
use crate::ontology::{OntologyModel, PropertyDef, PropertyKind};
use crate::rdf::vocab::{owl, rdfs};
use crate::rdf::Iri;
use crate::topics::TopicTree;

pub const DEFAULT_START_K: usize = 10;
pub const DEFAULT_SEARCH_K: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Suggestion {
    pub property_iri: Iri,
    pub label: String,
    pub score: f64,
    /// `None` when the count is unknown.
    pub prevalence: Option<u64>,
    pub domain_class: Iri,
    pub range_class_or_datatype: Iri,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SuggestError {
    #[error("unknown topic {0}")]
    UnknownTopic(usize),
    #[error("no topics selected")]
    EmptySelection,
    #[error("unknown class <{0}>")]
    UnknownClass(Iri),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Predicate usage count lookup; `None` means unknown.
pub type PrevalenceFn<'a> = &'a (dyn Fn(&Iri) -> Option<u64> + Sync);

pub fn link_document(property: &PropertyDef, ontology: &OntologyModel) -> String {
    let domain = property
        .domain
        .as_ref()
        .map_or_else(|| "anything".to_string(), |d| ontology.class_label(d));
    let range = ontology.range_label(property).unwrap_or_else(|| "anything".to_string());
    format!("Link: {}. Connects {domain} to {range}.", property.label)
}

fn suggestion(prop: &PropertyDef, score: f64, prevalence: PrevalenceFn<'_>) -> Suggestion {
    let default_range = match prop.kind {
        PropertyKind::Object => owl::thing(),
        PropertyKind::Datatype => Iri::new(rdfs::LITERAL).expect("valid IRI"),
    };
    Suggestion {
        property_iri: prop.iri.clone(),
        label: prop.label.clone(),
        score,
        prevalence: prevalence(&prop.iri),
        domain_class: prop.domain.clone().unwrap_or_else(owl::thing),
        range_class_or_datatype: prop.range.clone().unwrap_or(default_range),
    }
}

fn ranked(
    index: &VectorIndex,
    ontology: &OntologyModel,
    query: &EmbeddingVector,
    k: usize,
    prevalence: PrevalenceFn<'_>,
    exec: Exec,
    admit: impl Fn(&PropertyDef) -> bool + Sync + Send,
) -> Vec<Suggestion> {
    top_k_by(index, query, k, exec, |e| {
        e.kind == DocumentKind::Link && ontology.property(&e.key).is_some_and(&admit)
    })
    .into_iter()
    .map(|(key, score)| suggestion(ontology.property(&key).expect("filtered"), score, prevalence))
    .collect()
}

/// Object-property links ranked against the mean centroid of the selected topics.
pub fn start_links(
    topic_ids: &[usize],
    tree: &TopicTree,
    index: &VectorIndex,
    ontology: &OntologyModel,
    k: usize,
    prevalence: PrevalenceFn<'_>,
    exec: Exec,
) -> Result<Vec<Suggestion>, SuggestError> {
    if topic_ids.is_empty() {
        return Err(SuggestError::EmptySelection);
    }
    let mut ids = topic_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let centroids = ids
        .iter()
        .map(|id| tree.get(*id).map(|t| &t.centroid).ok_or(SuggestError::UnknownTopic(*id)))
        .collect::<Result<Vec<_>, _>>()?;
    let query = EmbeddingVector::mean(centroids, index.dimension());
    Ok(ranked(index, ontology, &query, k, prevalence, exec, |p| {
        p.kind == PropertyKind::Object
    }))
}

fn search(
    kind: PropertyKind,
    class: &Iri,
    query_text: &str,
    ontology: &OntologyModel,
    index: &VectorIndex,
    embedder: &dyn Embedder,
    k: usize,
    prevalence: PrevalenceFn<'_>,
    exec: Exec,
) -> Result<Vec<Suggestion>, SuggestError> {
    if !ontology.is_class(class) {
        return Err(SuggestError::UnknownClass(class.clone()));
    }
    let admit = |p: &PropertyDef| {
        p.kind == kind && p.domain.as_ref().is_none_or(|d| ontology.is_subclass_of(class, d))
    };
    if query_text.trim().is_empty() {
        let mut all: Vec<Suggestion> = ontology
            .properties()
            .filter(|p| admit(p))
            .map(|p| suggestion(p, 0.0, prevalence))
            .collect();
        all.sort_by(|a, b| {
            b.prevalence
                .cmp(&a.prevalence)
                .then_with(|| a.property_iri.as_str().as_bytes().cmp(b.property_iri.as_str().as_bytes()))
        });
        all.truncate(k);
        return Ok(all);
    }
    let query = embedder.embed(query_text)?;
    Ok(ranked(index, ontology, &query, k, prevalence, exec, admit))
}

/// Outgoing object properties usable from `class`, ranked by similarity to the query.
#[allow(clippy::too_many_arguments)]
pub fn search_out_links(
    class: &Iri,
    query_text: &str,
    ontology: &OntologyModel,
    index: &VectorIndex,
    embedder: &dyn Embedder,
    k: usize,
    prevalence: PrevalenceFn<'_>,
    exec: Exec,
) -> Result<Vec<Suggestion>, SuggestError> {
    search(PropertyKind::Object, class, query_text, ontology, index, embedder, k, prevalence, exec)
}

/// Datatype properties usable as constraints on `class`.
#[allow(clippy::too_many_arguments)]
pub fn search_constraints(
    class: &Iri,
    query_text: &str,
    ontology: &OntologyModel,
    index: &VectorIndex,
    embedder: &dyn Embedder,
    k: usize,
    prevalence: PrevalenceFn<'_>,
    exec: Exec,
) -> Result<Vec<Suggestion>, SuggestError> {
    search(PropertyKind::Datatype, class, query_text, ontology, index, embedder, k, prevalence, exec)
}

//! The persisted index: vectors plus ontology, topic tree, layout and
//! prevalence sections, and the offline build that produces it.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embed::{
    decode_index, encode_index, DocumentKind, EmbedError, Embedder, IndexError, IndexedDocument, Section, VectorIndex,
};
use crate::exec::Exec;
use crate::layout::{pack_hierarchy, MinimapLayout};
use crate::ontology::OntologyModel;
use crate::rdf::Iri;
use crate::suggest::link_document;
use crate::topics::{build_topics, LabelFallback, Labeler, TopicTree, DEFAULT_TOP_N};

pub const ONTOLOGY_TAG: [u8; 4] = *b"ONTO";
pub const TOPICS_TAG: [u8; 4] = *b"TOPC";
pub const LAYOUT_TAG: [u8; 4] = *b"LAYT";
pub const PREVALENCE_TAG: [u8; 4] = *b"PREV";

/// Predicate usage counts captured at build time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PrevalenceSnapshot {
    pub counts: BTreeMap<Iri, u64>,
    pub built_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub index: VectorIndex,
    pub ontology: OntologyModel,
    pub topics: TopicTree,
    pub layout: MinimapLayout,
    pub prevalence: PrevalenceSnapshot,
}

pub fn topic_key(id: usize) -> Iri {
    Iri::new(format!("urn:topic:{id}")).expect("valid IRI")
}

fn section<T: Serialize>(tag: [u8; 4], value: &T) -> Section {
    Section {
        tag,
        payload: serde_json::to_vec(value).expect("serializable"),
    }
}

fn read_section<T: DeserializeOwned>(sections: &[Section], tag: [u8; 4]) -> Result<T, IndexError> {
    let name = String::from_utf8_lossy(&tag).into_owned();
    let s = sections
        .iter()
        .find(|s| s.tag == tag)
        .ok_or_else(|| IndexError::Corrupt(format!("missing {name} section")))?;
    serde_json::from_slice(&s.payload).map_err(|e| IndexError::Corrupt(format!("{name} section: {e}")))
}

pub fn encode_bundle(bundle: &IndexBundle) -> Vec<u8> {
    encode_index(
        &bundle.index,
        &[
            section(ONTOLOGY_TAG, &bundle.ontology),
            section(TOPICS_TAG, &bundle.topics),
            section(LAYOUT_TAG, &bundle.layout),
            section(PREVALENCE_TAG, &bundle.prevalence),
        ],
    )
}

pub fn decode_bundle(bytes: &[u8]) -> Result<IndexBundle, IndexError> {
    let (index, sections) = decode_index(bytes)?;
    let ontology: OntologyModel = read_section(&sections, ONTOLOGY_TAG)?;
    ontology
        .check_integrity()
        .map_err(|e| IndexError::Corrupt(format!("ONTO section: {e}")))?;
    Ok(IndexBundle {
        index,
        ontology,
        topics: read_section(&sections, TOPICS_TAG)?,
        layout: read_section(&sections, LAYOUT_TAG)?,
        prevalence: read_section(&sections, PREVALENCE_TAG)?,
    })
}

pub fn save_bundle(bundle: &IndexBundle, path: &Path) -> Result<(), IndexError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_bundle(bundle))?;
    f.sync_all()?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<IndexBundle, IndexError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_bundle(&bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Leaf topic count; `None` picks a default from the class count.
    pub leaf_count: Option<usize>,
    pub top_n: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            leaf_count: None,
            top_n: DEFAULT_TOP_N,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub bundle: IndexBundle,
    pub fallbacks: Vec<LabelFallback>,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Topics, class/link/topic vectors and layout for an annotated ontology.
/// Prevalence counts are also written into the ontology's properties.
pub fn build_bundle(
    mut ontology: OntologyModel,
    prevalence: PrevalenceSnapshot,
    embedder: &dyn Embedder,
    labeler: &dyn Labeler,
    options: BuildOptions,
    exec: Exec,
) -> Result<BuildOutput, BuildError> {
    for (property, count) in &prevalence.counts {
        ontology.set_prevalence(property, *count);
    }
    let topics = build_topics(&ontology, embedder, labeler, options.leaf_count, options.top_n, exec)?;
    let mut index = VectorIndex::new(embedder.dimension());
    for (iri, doc) in &topics.documents {
        index.insert(IndexedDocument {
            key: iri.clone(),
            kind: DocumentKind::Class,
            text: doc.text.clone(),
            vector: topics.class_vectors[iri].clone(),
        })?;
    }
    let links: Vec<(Iri, String)> = ontology
        .properties()
        .map(|p| (p.iri.clone(), link_document(p, &ontology)))
        .collect();
    let texts: Vec<String> = links.iter().map(|(_, t)| t.clone()).collect();
    for ((key, text), vector) in links.into_iter().zip(embedder.embed_batch(&texts)?) {
        index.insert(IndexedDocument {
            key,
            kind: DocumentKind::Link,
            text,
            vector,
        })?;
    }
    for topic in topics.tree.topics.values() {
        index.insert(IndexedDocument {
            key: topic_key(topic.id),
            kind: DocumentKind::Topic,
            text: topic.label.clone(),
            vector: topic.centroid.clone(),
        })?;
    }
    let layout = pack_hierarchy(&ontology);
    Ok(BuildOutput {
        bundle: IndexBundle {
            index,
            ontology,
            topics: topics.tree,
            layout,
            prevalence,
        },
        fallbacks: topics.fallbacks,
    })
}
